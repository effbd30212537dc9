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

#include "cformer/coherence.hpp"
#include "cformer/corpus.hpp"
#include "cformer/lda.hpp"

namespace cformer {

enum class WordListMethod { kRelevance, kTfidf, kNone };

const char* method_name(WordListMethod m);

struct TopicWordList {
  std::vector<WordId> words;  // sorted, unique
  std::vector<std::vector<WordId>> per_topic;
  WordListMethod method = WordListMethod::kNone;
  double lambda = 0.0;  // relevance only
  std::size_t n = 0;    // per topic (relevance) or total (tfidf)

  bool contains(WordId w) const;
};

struct SweepPoint {
  std::size_t num_topics;
  double score;
};

// Fits one model per K = i * m, i = 1..k_steps and scores each with C_v over
// its topics' top-10 words.
std::vector<SweepPoint> coherence_sweep(const TokenLists& docs,
                                        const Vocabulary& vocab,
                                        std::size_t num_classes,
                                        std::size_t k_steps,
                                        const LdaConfig& lda_cfg,
                                        const CoherenceConfig& cfg);

std::string sweep_to_csv(const std::vector<SweepPoint>& points,
                         CoherenceMeasure measure = CoherenceMeasure::kCv);

// Elbow as the largest drop in successive gains; if the first score is the
// maximum the first candidate wins.
std::size_t select_k_elbow(const std::vector<SweepPoint>& points);

double relevance(WordId w, std::size_t topic, double lambda,
                 const LdaModel& model);

TopicWordList build_relevance_list(const LdaModel& model, double lambda,
                                   std::size_t n_per_topic);

// Mean TF-IDF over all documents, absent words contributing zero.
std::vector<double> tfidf_scores(const TokenLists& docs, std::size_t vocab_size);
TopicWordList build_tfidf_list(const TokenLists& docs, std::size_t vocab_size,
                               std::size_t n_total);

std::string wordlist_to_text(const TopicWordList& list, const Vocabulary& vocab);
TopicWordList wordlist_from_text(const std::string& text, const Vocabulary& vocab);

}  // namespace cformer
