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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cformer/common.hpp"

namespace cformer {

struct Document {
  std::string id;
  std::vector<WordId> tokens;
  std::optional<ClassId> label;
};

// A document whose label has been stripped. Training code that consumes
// unlabeled data only ever sees this type.
struct UnlabeledDocument {
  std::string id;
  std::vector<WordId> tokens;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  // Returns the id of `word`, inserting it if new.
  WordId intern(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;

  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  std::uint32_t doc_freq(WordId id) const { return doc_freq_.at(id); }
  std::uint64_t corpus_freq(WordId id) const { return corpus_freq_.at(id); }

  // Recomputes document and corpus frequencies from `docs`.
  void recount(const std::vector<Document>& docs);

  // Content hash of the id -> word mapping.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<std::uint32_t> doc_freq_;
  std::vector<std::uint64_t> corpus_freq_;
};

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t total_tokens() const;
};

struct SplitSet {
  std::vector<Document> gold;
  std::vector<UnlabeledDocument> unlabeled;
  std::vector<Document> dev;
  std::vector<Document> test;
  // True labels of `unlabeled`, index-aligned. Diagnostics only.
  std::vector<ClassId> unlabeled_hidden_labels;
};

// Lowercase, split on whitespace (ASCII and common Unicode spaces), strip
// leading and trailing punctuation. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

Corpus ingest_jsonl(const std::string& path);
Corpus ingest_jsonl_lines(std::string_view content);

std::unordered_set<std::string> load_stopwords(const std::string& path);

struct PreprocessConfig {
  double max_df_frac = 1.0;
  std::uint64_t min_count = 1;
};

// Filters are applied repeatedly until nothing changes, so the result is a
// fixed point and a second call is the identity.
Corpus preprocess(const Corpus& corpus,
                  const std::unordered_set<std::string>& stopwords,
                  const PreprocessConfig& cfg);

struct SplitConfig {
  std::size_t n_gold_per_class = 10;
  std::size_t n_unlabeled = 0;
  std::size_t n_dev = 0;
  std::uint64_t seed = 0;
};

// Stratified gold selection; dev and unlabeled are drawn from the shuffled
// remainder, everything left over is the test set.
SplitSet split(const Corpus& corpus, const SplitConfig& cfg);

// Every contiguous run of `window` tokens as a sorted set of word ids.
// Documents shorter than `window` contribute one set holding all their tokens.
std::vector<std::vector<WordId>> virtual_windows(
    const std::vector<std::vector<WordId>>& docs, std::size_t window);
std::vector<std::vector<WordId>> virtual_windows(const Corpus& corpus,
                                                 std::size_t window);

std::vector<std::vector<WordId>> token_lists(const std::vector<Document>& docs);

}  // namespace cformer
