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

#include <span>
#include <string>
#include <vector>

#include "cformer/corpus.hpp"
#include "cformer/wordlist.hpp"

namespace cformer {

struct MaskingPolicy {
  enum class Kind { kObjective, kRandom };

  Kind kind = Kind::kRandom;
  std::vector<WordId> topic_words;  // sorted; objective only
  double rate = 0.15;

  static MaskingPolicy random(double rate = 0.15);
  static MaskingPolicy objective(const TopicWordList& list, double rate = 0.15);

  bool is_topic_word(WordId w) const;
};

struct MaskedExample {
  std::string id;
  std::vector<WordId> tokens;     // masked positions hold the mask id
  std::vector<std::size_t> positions;  // ascending
  std::vector<WordId> targets;    // aligned with positions
};

// max(1, round_half_up(rate * n)).
std::size_t mask_count(std::size_t n, double rate);

// The reserved mask id is `mask_id` (conventionally the vocabulary size).
MaskedExample mask_document(std::span<const WordId> tokens,
                            const MaskingPolicy& policy, WordId mask_id,
                            std::uint64_t seed);

// Masks are re-drawn every epoch from a seed derived from (seed, epoch, doc).
std::vector<MaskedExample> mask_corpus(const std::vector<Document>& docs,
                                       const MaskingPolicy& policy,
                                       WordId mask_id, std::size_t epochs,
                                       std::uint64_t seed);

std::string masked_to_jsonl(const std::vector<MaskedExample>& examples,
                            const Vocabulary& vocab);

}  // namespace cformer
