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

#include "cformer/masking.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace cformer {

MaskingPolicy MaskingPolicy::random(double rate) {
  require(rate > 0.0 && rate < 1.0, "masking rate must be in (0, 1)");
  MaskingPolicy p;
  p.kind = Kind::kRandom;
  p.rate = rate;
  return p;
}

MaskingPolicy MaskingPolicy::objective(const TopicWordList& list, double rate) {
  require(rate > 0.0 && rate < 1.0, "masking rate must be in (0, 1)");
  MaskingPolicy p;
  p.kind = Kind::kObjective;
  p.topic_words = list.words;
  std::sort(p.topic_words.begin(), p.topic_words.end());
  p.rate = rate;
  return p;
}

bool MaskingPolicy::is_topic_word(WordId w) const {
  return kind == Kind::kObjective &&
         std::binary_search(topic_words.begin(), topic_words.end(), w);
}

std::size_t mask_count(std::size_t n, double rate) {
  // The small offset keeps decimal rates such as 0.15 from rounding down at
  // exact halves (0.15 * 10 is 1.4999... in binary).
  const auto m = static_cast<std::size_t>(
      std::floor(rate * static_cast<double>(n) + 0.5 + 1e-9));
  return std::min(n, std::max<std::size_t>(1, m));
}

namespace {

// Moves `take` uniformly chosen elements of `pool` to its front.
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t take, Rng& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

}  // namespace

MaskedExample mask_document(std::span<const WordId> tokens,
                            const MaskingPolicy& policy, WordId mask_id,
                            std::uint64_t seed) {
  const std::size_t n = tokens.size();
  require(n > 0, "cannot mask an empty document");
  const std::size_t m = mask_count(n, policy.rate);
  Rng rng(seed);

  // Phase 1 picks among topic-word occurrences; phase 2 fills the rest from
  // the remaining positions. The random policy has no candidates, so both
  // policies share the phase-2 code path.
  std::vector<std::size_t> candidates;
  std::vector<char> chosen(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (policy.is_topic_word(tokens[i])) candidates.push_back(i);
  const std::size_t from_topic = std::min(m, candidates.size());
  partial_shuffle(candidates, from_topic, rng);
  for (std::size_t i = 0; i < from_topic; ++i) chosen[candidates[i]] = 1;

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!chosen[i]) rest.push_back(i);
  const std::size_t from_rest = m - from_topic;
  partial_shuffle(rest, from_rest, rng);
  for (std::size_t i = 0; i < from_rest; ++i) chosen[rest[i]] = 1;

  MaskedExample ex;
  ex.tokens.assign(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (!chosen[i]) continue;
    ex.positions.push_back(i);
    ex.targets.push_back(tokens[i]);
    ex.tokens[i] = mask_id;
  }
  return ex;
}

std::vector<MaskedExample> mask_corpus(const std::vector<Document>& docs,
                                       const MaskingPolicy& policy,
                                       WordId mask_id, std::size_t epochs,
                                       std::uint64_t seed) {
  require(epochs >= 1, "epochs must be >= 1");
  std::vector<MaskedExample> out;
  out.reserve(epochs * docs.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto ex = mask_document(docs[d].tokens, policy, mask_id,
                              derive_seed(seed, e, d));
      ex.id = docs[d].id;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::string masked_to_jsonl(const std::vector<MaskedExample>& examples,
                            const Vocabulary& vocab) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    nlohmann::json j;
    j["id"] = ex.id;
    auto& toks = j["masked_tokens"] = nlohmann::json::array();
    for (WordId w : ex.tokens)
      toks.push_back(w < vocab.size() ? vocab.word(w) : std::string("[MASK]"));
    j["positions"] = ex.positions;
    auto& targets = j["targets"] = nlohmann::json::array();
    for (WordId w : ex.targets) targets.push_back(vocab.word(w));
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace cformer
