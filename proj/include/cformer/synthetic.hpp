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

#include <cstdint>
#include <string>
#include <vector>

#include "cformer/corpus.hpp"

namespace cformer {

// Planted classification corpus. Every class owns a block of topic words;
// the rest of the vocabulary is shared background drawn with Zipf weights.
struct SyntheticConfig {
  std::size_t num_classes = 4;
  std::size_t vocab_size = 200;
  std::size_t topic_words_per_class = 30;
  std::size_t num_docs = 1200;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  double topic_frac = 0.2;   // tokens drawn from the document's class block
  double cross_frac = 0.08;  // tokens drawn from another class's block
  std::uint64_t seed = 0;
};

// Labels are assigned round-robin so classes are balanced.
Corpus synthetic_corpus(const SyntheticConfig& cfg);

// Each document draws all its tokens from a single planted topic.
struct PlantedTopics {
  Corpus corpus;
  std::vector<std::vector<WordId>> topics;  // word ids per planted topic
};
PlantedTopics planted_topic_corpus(std::size_t num_topics, std::size_t words_per_topic,
                                   std::size_t num_docs, std::size_t doc_length,
                                   std::uint64_t seed);

// One JSON object per document with "id", "text" and "label".
std::string corpus_to_jsonl(const Corpus& corpus);

}  // namespace cformer
