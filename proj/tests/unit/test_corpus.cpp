/* Copyright 2026 The Cformer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "cformer/lda.hpp"
#include "helpers.hpp"

using namespace cformer;
using testing::make_corpus;
using testing::make_labeled;

TEST_CASE("tokenize lowercases, splits on unicode spaces, strips punctuation") {
  const auto t = tokenize("Hello, World! (Foo)　bar... --- x");
  CHECK(t == std::vector<std::string>{"hello", "world", "foo", "bar", "x"});
  CHECK(tokenize("don't stop").front() == "don't");
  CHECK(tokenize("  \t\n").empty());
}

TEST_CASE("ingest counts documents and assigns ids and labels") {
  const Corpus c = make_labeled({{"a b", "sports"}, {"c", "world"}, {"a", "sports"}});
  REQUIRE(c.docs.size() == 3);
  CHECK(c.docs[0].label == 0u);
  CHECK(c.docs[1].label == 1u);
  CHECK(c.docs[2].label == 0u);
  CHECK(c.class_names == std::vector<std::string>{"sports", "world"});
  CHECK(c.docs[1].id == "doc-2");
  CHECK(c.vocab.size() == 3);
}

TEST_CASE("ingest reports the offending line") {
  const std::string bad = "{\"text\":\"a\"}\n{\"id\":\"x\"}\n";
  try {
    ingest_jsonl_lines(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_jsonl_lines("{\"text\":\"a\"}\n{oops\n"), Error);
  try {
    ingest_jsonl_lines("");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kData);
  }
  CHECK_THROWS_AS(ingest_jsonl("/nonexistent/corpus.jsonl"), Error);
}

namespace {

std::multiset<std::string> token_multiset(const Corpus& c) {
  std::multiset<std::string> out;
  for (const auto& d : c.docs)
    for (WordId w : d.tokens) out.insert(c.vocab.word(w));
  return out;
}

void check_dense(const Corpus& c) {
  std::set<WordId> seen;
  for (const auto& d : c.docs) {
    CHECK(!d.tokens.empty());
    for (WordId w : d.tokens) {
      CHECK(w < c.vocab.size());
      seen.insert(w);
    }
  }
  CHECK(seen.size() == c.vocab.size());
  for (WordId w = 0; w < c.vocab.size(); ++w) {
    CHECK(c.vocab.doc_freq(w) >= 1);
    CHECK(c.vocab.doc_freq(w) <= c.docs.size());
    CHECK(c.vocab.find(c.vocab.word(w)) == w);
  }
}

}  // namespace

TEST_CASE("preprocess identity configuration keeps tokens") {
  const Corpus c = make_corpus(std::vector<std::string>{"The cat, sat.", "A DOG sat"});
  const Corpus p = preprocess(c, {}, {});
  CHECK(token_multiset(p) == token_multiset(c));
  check_dense(p);
}

TEST_CASE("preprocess frequency and stopword filters") {
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("common word" + std::to_string(i % 3));
  texts.push_back("common quark word1");
  const Corpus c = make_corpus(texts);

  PreprocessConfig df;
  df.max_df_frac = 0.5;
  const Corpus p1 = preprocess(c, {}, df);
  CHECK_FALSE(p1.vocab.find("common").has_value());
  check_dense(p1);

  PreprocessConfig mc;
  mc.min_count = 2;
  const Corpus p2 = preprocess(c, {}, mc);
  CHECK_FALSE(p2.vocab.find("quark").has_value());
  CHECK(p2.vocab.find("common").has_value());

  const Corpus p3 = preprocess(c, {"common"}, {});
  CHECK_FALSE(p3.vocab.find("common").has_value());
  CHECK(p3.docs.size() == c.docs.size());
}

TEST_CASE("preprocess drops emptied documents and rejects an emptied corpus") {
  const Corpus c = make_corpus(std::vector<std::string>{"the", "the cat"});
  const Corpus p = preprocess(c, {"the"}, {});
  CHECK(p.docs.size() == 1);
  try {
    preprocess(c, {"the", "cat"}, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "corpus emptied by preprocessing");
  }
}

TEST_CASE("preprocess is idempotent on random corpora") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> texts;
    const std::size_t n_docs = 3 + uniform_index(rng, 10);
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::string t;
      const std::size_t len = 1 + uniform_index(rng, 8);
      for (std::size_t k = 0; k < len; ++k)
        t += "w" + std::to_string(uniform_index(rng, 12)) + " ";
      texts.push_back(t);
    }
    const Corpus c = make_corpus(texts);
    PreprocessConfig cfg;
    cfg.max_df_frac = 0.3 + 0.7 * uniform01(rng);
    cfg.min_count = 1 + uniform_index(rng, 3);
    const std::unordered_set<std::string> stop = {"w0", "w5"};
    Corpus once;
    try {
      once = preprocess(c, stop, cfg);
    } catch (const Error&) {
      continue;
    }
    const Corpus twice = preprocess(once, stop, cfg);
    CHECK(twice.vocab.words() == once.vocab.words());
    REQUIRE(twice.docs.size() == once.docs.size());
    for (std::size_t d = 0; d < once.docs.size(); ++d)
      CHECK(twice.docs[d].tokens == once.docs[d].tokens);
  }
}

namespace {

Corpus labeled_corpus(std::size_t per_class, std::size_t classes) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (std::size_t i = 0; i < per_class * classes; ++i)
    docs.emplace_back("tok" + std::to_string(i % 7) + " x", "c" + std::to_string(i % classes));
  return make_labeled(docs);
}

}  // namespace

TEST_CASE("split is stratified, disjoint and deterministic") {
  const Corpus c = labeled_corpus(30, 4);
  const SplitSet s = split(c, {10, 20, 15, 3});
  CHECK(s.gold.size() == 40);
  std::map<ClassId, int> per_class;
  for (const auto& d : s.gold) ++per_class[*d.label];
  for (const auto& [k, n] : per_class) CHECK(n == 10);
  CHECK(s.unlabeled.size() == 20);
  CHECK(s.unlabeled_hidden_labels.size() == 20);
  CHECK(s.dev.size() == 15);
  CHECK(s.test.size() == 120 - 40 - 20 - 15);

  std::set<std::string> ids;
  for (const auto& d : s.gold) ids.insert(d.id);
  for (const auto& d : s.unlabeled) ids.insert(d.id);
  for (const auto& d : s.dev) ids.insert(d.id);
  for (const auto& d : s.test) ids.insert(d.id);
  CHECK(ids.size() == 120);

  const SplitSet again = split(c, {10, 20, 15, 3});
  for (std::size_t i = 0; i < s.gold.size(); ++i) CHECK(again.gold[i].id == s.gold[i].id);
  for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].id == s.test[i].id);
}

TEST_CASE("split rejects infeasible counts naming the class") {
  std::vector<std::pair<std::string, std::string>> docs;
  for (int i = 0; i < 12; ++i) docs.emplace_back("a", "big");
  for (int i = 0; i < 3; ++i) docs.emplace_back("a", "tiny");
  const Corpus c = make_labeled(docs);
  try {
    split(c, {5, 0, 0, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("tiny") != std::string::npos);
  }
}

TEST_CASE("virtual windows") {
  const TokenLists docs = {{0, 1, 2, 3, 4}};
  CHECK(virtual_windows(docs, 2).size() == 4);
  CHECK(virtual_windows(TokenLists{{0, 1, 2}}, 110).size() == 1);
  CHECK(virtual_windows(TokenLists{{0, 1, 2}}, 110).front() == std::vector<WordId>{0, 1, 2});
  const auto ones = virtual_windows(TokenLists{{3, 3, 1}}, 1);
  REQUIRE(ones.size() == 3);
  CHECK(ones[0] == std::vector<WordId>{3});
  CHECK(ones[2] == std::vector<WordId>{1});
  // Windows are sets.
  CHECK(virtual_windows(TokenLists{{2, 2, 1}}, 3).front() == std::vector<WordId>{1, 2});
  for (std::size_t n = 1; n < 12; ++n)
    for (std::size_t w = 1; w <= n; ++w) {
      TokenLists d = {std::vector<WordId>(n, 0)};
      CHECK(virtual_windows(d, w).size() == n - w + 1);
    }
}
