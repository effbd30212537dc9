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

#include "cformer/coherence.hpp"

#include <cmath>
#include <unordered_map>

namespace cformer {

const char* measure_name(CoherenceMeasure m) {
  return m == CoherenceMeasure::kCv ? "c_v" : "c_umass";
}

CoherenceMeasure parse_measure(const std::string& name) {
  if (name == "c_v" || name == "cv") return CoherenceMeasure::kCv;
  if (name == "c_umass" || name == "umass") return CoherenceMeasure::kUMass;
  fail(ErrorCode::kInvalidArgument, "unknown coherence measure: " + name);
}

CooccurrenceCounts::CooccurrenceCounts(const TokenLists& docs,
                                       const std::vector<WordId>& words)
    : n_(words.size()),
      num_docs_(docs.size()),
      single_(words.size(), 0),
      joint_(words.size() * words.size(), 0) {
  // A word may appear more than once in the list; every slot is tracked.
  std::unordered_map<WordId, std::vector<std::size_t>> slots;
  for (std::size_t i = 0; i < n_; ++i) slots[words[i]].push_back(i);
  std::vector<std::size_t> last_doc(n_, SIZE_MAX);
  std::vector<std::size_t> present;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    present.clear();
    for (WordId w : docs[d]) {
      auto it = slots.find(w);
      if (it == slots.end()) continue;
      for (std::size_t i : it->second) {
        if (last_doc[i] != d) {
          last_doc[i] = d;
          present.push_back(i);
        }
      }
    }
    for (std::size_t a : present) {
      ++single_[a];
      for (std::size_t b : present) ++joint_[a * n_ + b];
    }
  }
}

double c_umass(const std::vector<WordId>& top_words, const TokenLists& docs,
               const Vocabulary& vocab, const CoherenceConfig& cfg) {
  require(top_words.size() >= 2, "c_umass needs at least 2 words");
  require(cfg.epsilon > 0.0, "epsilon must be positive");
  const CooccurrenceCounts counts(docs, top_words);
  const double n_docs = static_cast<double>(counts.num_docs());
  for (std::size_t i = 0; i < top_words.size(); ++i) {
    if (counts.single(i) == 0)
      fail(ErrorCode::kData, "word '" + vocab.word(top_words[i]) +
                                 "' occurs in no document");
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 1; i < top_words.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double p_ij = static_cast<double>(counts.joint(i, j)) / n_docs;
      const double p_j = static_cast<double>(counts.single(j)) / n_docs;
      sum += std::log((p_ij + cfg.epsilon) / p_j);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double c_umass(const std::vector<WordId>& top_words, const Corpus& corpus,
               const CoherenceConfig& cfg) {
  return c_umass(top_words, token_lists(corpus.docs), corpus.vocab, cfg);
}

namespace {

// Sign-preserving power so negative NPMI stays defined for any gamma.
double signed_pow(double x, double gamma) {
  if (gamma == 1.0) return x;
  return std::copysign(std::pow(std::abs(x), gamma), x);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double c_v_windows(const std::vector<WordId>& top_words,
                   const TokenLists& windows, const Vocabulary& vocab,
                   const CoherenceConfig& cfg) {
  const std::size_t n = top_words.size();
  require(n >= 2, "c_v needs at least 2 words");
  require(cfg.epsilon > 0.0, "epsilon must be positive");
  const CooccurrenceCounts counts(windows, top_words);
  const double n_win = static_cast<double>(counts.num_docs());
  for (std::size_t i = 0; i < n; ++i) {
    if (counts.single(i) == 0)
      fail(ErrorCode::kData, "word '" + vocab.word(top_words[i]) +
                                 "' occurs in no window");
  }

  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double p_i = static_cast<double>(counts.single(i)) / n_win;
    for (std::size_t j = 0; j < n; ++j) {
      const double p_j = static_cast<double>(counts.single(j)) / n_win;
      const double p_ij =
          static_cast<double>(counts.joint(i, j)) / n_win + cfg.epsilon;
      const double npmi = std::log(p_ij / (p_i * p_j)) / (-std::log(p_ij));
      v[i][j] = signed_pow(npmi, cfg.gamma);
    }
  }
  std::vector<double> v_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v_sum[j] += v[i][j];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cosine(v[i], v_sum);
  return total / static_cast<double>(n);
}

double c_v(const std::vector<WordId>& top_words, const TokenLists& docs,
           const Vocabulary& vocab, const CoherenceConfig& cfg) {
  return c_v_windows(top_words, virtual_windows(docs, cfg.window), vocab, cfg);
}

double c_v(const std::vector<WordId>& top_words, const Corpus& corpus,
           const CoherenceConfig& cfg) {
  return c_v(top_words, token_lists(corpus.docs), corpus.vocab, cfg);
}

double list_coherence(const std::vector<std::vector<WordId>>& word_lists,
                      const TokenLists& docs, const Vocabulary& vocab,
                      CoherenceMeasure measure, const CoherenceConfig& cfg) {
  require(!word_lists.empty(), "list_coherence needs at least one list");
  TokenLists windows;
  if (measure == CoherenceMeasure::kCv) windows = virtual_windows(docs, cfg.window);
  double sum = 0.0;
  for (const auto& words : word_lists) {
    sum += measure == CoherenceMeasure::kCv
               ? c_v_windows(words, windows, vocab, cfg)
               : c_umass(words, docs, vocab, cfg);
  }
  return sum / static_cast<double>(word_lists.size());
}

}  // namespace cformer
