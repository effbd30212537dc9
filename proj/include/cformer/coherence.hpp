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

#pragma once

#include <string>
#include <vector>

#include "cformer/corpus.hpp"
#include "cformer/lda.hpp"

namespace cformer {

struct CoherenceConfig {
  double epsilon = 1e-12;
  std::size_t window = 110;
  double gamma = 1.0;
};

enum class CoherenceMeasure { kCv, kUMass };

const char* measure_name(CoherenceMeasure m);
CoherenceMeasure parse_measure(const std::string& name);

// Boolean document co-occurrence statistics for a fixed word list. Each
// "document" counts a word at most once.
class CooccurrenceCounts {
 public:
  CooccurrenceCounts(const TokenLists& docs, const std::vector<WordId>& words);

  std::size_t num_docs() const { return num_docs_; }
  // Indices refer to positions in the word list given at construction.
  std::size_t single(std::size_t i) const { return single_[i]; }
  std::size_t joint(std::size_t i, std::size_t j) const {
    return joint_[i * n_ + j];
  }

 private:
  std::size_t n_;
  std::size_t num_docs_;
  std::vector<std::size_t> single_;
  std::vector<std::size_t> joint_;
};

// Mean over pairs j < i of log((P(w_i, w_j) + eps) / P(w_j)), with P the
// fraction of documents containing the word(s). Words without any document
// are rejected.
double c_umass(const std::vector<WordId>& top_words, const Corpus& corpus,
               const CoherenceConfig& cfg);
double c_umass(const std::vector<WordId>& top_words, const TokenLists& docs,
               const Vocabulary& vocab, const CoherenceConfig& cfg);

// NPMI context vectors over boolean sliding windows, aggregated as the mean
// cosine between each word's vector and their sum.
double c_v(const std::vector<WordId>& top_words, const Corpus& corpus,
           const CoherenceConfig& cfg);
double c_v(const std::vector<WordId>& top_words, const TokenLists& docs,
           const Vocabulary& vocab, const CoherenceConfig& cfg);
// Variant over precomputed virtual documents.
double c_v_windows(const std::vector<WordId>& top_words,
                   const TokenLists& windows, const Vocabulary& vocab,
                   const CoherenceConfig& cfg);

double list_coherence(const std::vector<std::vector<WordId>>& word_lists,
                      const TokenLists& docs, const Vocabulary& vocab,
                      CoherenceMeasure measure, const CoherenceConfig& cfg);

}  // namespace cformer
