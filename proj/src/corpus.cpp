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

#include "cformer/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace cformer {

WordId Vocabulary::intern(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  doc_freq_.push_back(0);
  corpus_freq_.push_back(0);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::recount(const std::vector<Document>& docs) {
  std::fill(doc_freq_.begin(), doc_freq_.end(), 0);
  std::fill(corpus_freq_.begin(), corpus_freq_.end(), 0);
  std::vector<std::uint32_t> last_seen(words_.size(), UINT32_MAX);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (WordId w : docs[d].tokens) {
      ++corpus_freq_[w];
      if (last_seen[w] != d) {
        last_seen[w] = static_cast<std::uint32_t>(d);
        ++doc_freq_[w];
      }
    }
  }
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a("cformer-vocab");
  for (const auto& w : words_) {
    h = fnv1a(w, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

std::size_t Corpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.tokens.size();
  return n;
}

namespace {

// Length of a UTF-8 encoded whitespace code point starting at `s[i]`, or 0.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
      c == '\v')
    return 1;
  auto at = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  // U+0085, U+00A0
  if (c == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  // U+1680
  if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
  if (c == 0xE2) {
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if (at(1) == 0x80 &&
        ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 || at(2) == 0xA9 ||
         at(2) == 0xAF))
      return 3;
    // U+205F
    if (at(1) == 0x81 && at(2) == 0x9F) return 3;
  }
  // U+3000
  if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
  return 0;
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

void push_token(std::string raw, std::vector<std::string>& out) {
  std::size_t b = 0, e = raw.size();
  while (b < e && is_ascii_punct(raw[b])) ++b;
  while (e > b && is_ascii_punct(raw[e - 1])) --e;
  if (b == e) return;
  std::string tok = raw.substr(b, e - b);
  for (auto& ch : tok) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80) ch = static_cast<char>(std::tolower(u));
  }
  out.push_back(std::move(tok));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t ws = whitespace_len(text, i);
    if (ws > 0) {
      if (!cur.empty()) push_token(std::move(cur), out);
      cur.clear();
      i += ws;
    } else {
      cur.push_back(text[i]);
      ++i;
    }
  }
  if (!cur.empty()) push_token(std::move(cur), out);
  return out;
}

Corpus ingest_jsonl_lines(std::string_view content) {
  Corpus corpus;
  std::map<std::string, ClassId> class_ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                  ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object())
      fail(ErrorCode::kParse,
           "line " + std::to_string(line_no) + ": expected a JSON object");
    if (!obj.contains("text") || !obj["text"].is_string())
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                  ": missing string field \"text\"");

    Document doc;
    if (obj.contains("id")) {
      if (!obj["id"].is_string())
        fail(ErrorCode::kParse,
             "line " + std::to_string(line_no) + ": \"id\" must be a string");
      doc.id = obj["id"].get<std::string>();
    } else {
      doc.id = "doc-" + std::to_string(line_no);
    }
    if (obj.contains("label") && !obj["label"].is_null()) {
      if (!obj["label"].is_string())
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                    ": \"label\" must be a string");
      const auto name = obj["label"].get<std::string>();
      auto [it, inserted] = class_ids.emplace(
          name, static_cast<ClassId>(corpus.class_names.size()));
      if (inserted) corpus.class_names.push_back(name);
      doc.label = it->second;
    }
    for (const auto& tok : tokenize(obj["text"].get<std::string>()))
      doc.tokens.push_back(corpus.vocab.intern(tok));
    corpus.docs.push_back(std::move(doc));
  }
  if (corpus.docs.empty()) fail(ErrorCode::kData, "empty corpus file");
  corpus.vocab.recount(corpus.docs);
  return corpus;
}

Corpus ingest_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open corpus file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_jsonl_lines(ss.str());
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open stopword file: " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line)) out.insert(std::move(tok));
  }
  return out;
}

namespace {

struct TaggedDoc {
  std::vector<std::string> tokens;
  std::size_t source;
};

// One filtering pass over the current documents. Returns true if any token
// or document was removed.
bool filter_pass(std::vector<TaggedDoc>& docs,
                 const std::unordered_set<std::string>& stopwords,
                 const PreprocessConfig& cfg) {
  std::unordered_map<std::string, std::uint64_t> df, cf;
  for (const auto& d : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& w : d.tokens) {
      ++cf[w];
      if (seen.insert(w).second) ++df[w];
    }
  }
  const double n_docs = static_cast<double>(docs.size());
  auto drop = [&](const std::string& w) {
    if (stopwords.count(w)) return true;
    if (static_cast<double>(df[w]) / n_docs > cfg.max_df_frac) return true;
    return cf[w] < cfg.min_count;
  };
  bool changed = false;
  for (auto& d : docs) {
    const auto before = d.tokens.size();
    d.tokens.erase(std::remove_if(d.tokens.begin(), d.tokens.end(), drop),
                   d.tokens.end());
    changed |= d.tokens.size() != before;
  }
  const auto before = docs.size();
  docs.erase(std::remove_if(docs.begin(), docs.end(),
                            [](const auto& d) { return d.tokens.empty(); }),
             docs.end());
  return changed || docs.size() != before;
}

}  // namespace

Corpus preprocess(const Corpus& corpus,
                  const std::unordered_set<std::string>& stopwords,
                  const PreprocessConfig& cfg) {
  require(cfg.max_df_frac > 0.0 && cfg.max_df_frac <= 1.0,
          "max_df_frac must be in (0, 1]");
  require(cfg.min_count >= 1, "min_count must be >= 1");

  std::vector<TaggedDoc> docs;
  docs.reserve(corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    TaggedDoc d{{}, i};
    for (WordId w : corpus.docs[i].tokens) {
      for (auto& t : tokenize(corpus.vocab.word(w)))
        d.tokens.push_back(std::move(t));
    }
    docs.push_back(std::move(d));
  }
  // Dropping emptied documents shifts df fractions, so iterate to a fixed
  // point; this makes a second call the identity.
  while (!docs.empty() && filter_pass(docs, stopwords, cfg)) {
  }
  if (docs.empty()) fail(ErrorCode::kData, "corpus emptied by preprocessing");

  Corpus out;
  out.class_names = corpus.class_names;
  for (const auto& td : docs) {
    Document d;
    d.id = corpus.docs[td.source].id;
    d.label = corpus.docs[td.source].label;
    for (const auto& w : td.tokens) d.tokens.push_back(out.vocab.intern(w));
    out.docs.push_back(std::move(d));
  }
  out.vocab.recount(out.docs);
  return out;
}

SplitSet split(const Corpus& corpus, const SplitConfig& cfg) {
  const std::size_t n_classes = corpus.num_classes();
  require(n_classes >= 1, "split requires a labeled corpus");
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const auto& label = corpus.docs[i].label;
    if (!label)
      fail(ErrorCode::kData,
           "split requires every document labeled; missing on " +
               corpus.docs[i].id);
    by_class.at(*label).push_back(i);
  }

  Rng rng(derive_seed(cfg.seed, 0x5b11));
  std::vector<std::size_t> rest;
  SplitSet out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < cfg.n_gold_per_class)
      fail(ErrorCode::kInvalidArgument,
           "class '" + corpus.class_names[c] + "' has " +
               std::to_string(idx.size()) + " documents, fewer than " +
               std::to_string(cfg.n_gold_per_class) + " gold requested");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < cfg.n_gold_per_class)
        out.gold.push_back(corpus.docs[idx[k]]);
      else
        rest.push_back(idx[k]);
    }
  }
  if (cfg.n_dev + cfg.n_unlabeled > rest.size())
    fail(ErrorCode::kInvalidArgument,
         "requested " + std::to_string(cfg.n_dev) + " dev + " +
             std::to_string(cfg.n_unlabeled) + " unlabeled documents but only " +
             std::to_string(rest.size()) + " remain after gold selection");
  std::sort(rest.begin(), rest.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  std::size_t k = 0;
  for (; k < cfg.n_dev; ++k) out.dev.push_back(corpus.docs[rest[k]]);
  for (std::size_t u = 0; u < cfg.n_unlabeled; ++u, ++k) {
    const auto& d = corpus.docs[rest[k]];
    out.unlabeled.push_back({d.id, d.tokens});
    out.unlabeled_hidden_labels.push_back(*d.label);
  }
  for (; k < rest.size(); ++k) out.test.push_back(corpus.docs[rest[k]]);
  return out;
}

std::vector<std::vector<WordId>> virtual_windows(
    const std::vector<std::vector<WordId>>& docs, std::size_t window) {
  require(window >= 1, "window must be >= 1");
  std::vector<std::vector<WordId>> out;
  auto emit = [&](auto first, auto last) {
    std::vector<WordId> s(first, last);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    out.push_back(std::move(s));
  };
  for (const auto& d : docs) {
    if (d.empty()) continue;
    if (d.size() <= window) {
      emit(d.begin(), d.end());
      continue;
    }
    for (std::size_t s = 0; s + window <= d.size(); ++s)
      emit(d.begin() + s, d.begin() + s + window);
  }
  return out;
}

std::vector<std::vector<WordId>> token_lists(const std::vector<Document>& docs) {
  std::vector<std::vector<WordId>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.tokens);
  return out;
}

std::vector<std::vector<WordId>> virtual_windows(const Corpus& corpus,
                                                 std::size_t window) {
  return virtual_windows(token_lists(corpus.docs), window);
}

}  // namespace cformer
