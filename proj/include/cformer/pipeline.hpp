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

#include "json.hpp"

#include "cformer/coherence.hpp"
#include "cformer/corpus.hpp"
#include "cformer/encoder.hpp"
#include "cformer/lda.hpp"
#include "cformer/masking.hpp"
#include "cformer/mpl.hpp"
#include "cformer/wordlist.hpp"

namespace cformer {

// Structured experiment configuration. Values live in a JSON tree seeded
// with defaults; the file and dotted-key overrides are merged on top.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static nlohmann::json defaults();

  // Merges a JSON object file over the current values. Unknown keys fail.
  void merge_file(const std::string& path);
  void merge(const nlohmann::json& patch);
  // `key` is dotted ("trainer.lr_head"); `value` is parsed as JSON and taken
  // as a plain string when that fails.
  void set(const std::string& key, const std::string& value);

  const nlohmann::json& values() const { return values_; }
  std::string dump() const;

  // Hash over the named top-level sections, in the given order.
  std::uint64_t hash(const std::vector<std::string>& sections) const;

  std::string out_dir() const;
  PreprocessConfig preprocess() const;
  SplitConfig split() const;
  LdaConfig lda() const;
  CoherenceConfig coherence() const;
  EncoderConfig encoder() const;
  TrainerConfig trainer(std::uint64_t seed) const;
  std::vector<std::uint64_t> seeds() const;

 private:
  nlohmann::json values_;
};

// Stage names in pipeline order.
const std::vector<std::string>& stage_names();

// The corpus after preprocessing, with its fixed split.
struct PreparedData {
  Corpus corpus;
  SplitSet splits;
  // gold and unlabeled text: what unsupervised stages see.
  std::vector<Document> training_text() const;
};

std::string prepared_to_json(const PreparedData& data);
PreparedData prepared_from_json(const std::string& text);

struct RunSummary {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<double> per_class;
};

struct Aggregate {
  std::size_t runs = 0;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for a single run
};
Aggregate aggregate(const std::vector<double>& values);

// Executes pipeline stages against one output directory. Each stage checks
// that its prerequisites exist and were produced under the same config.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  // One of stage_names(), or "all" for the whole chain.
  void run(const std::string& stage);

  const ExperimentConfig& config() const { return cfg_; }

 private:
  void ingest();
  void sweep();
  void wordlist();
  void pretrain();
  void train();
  void eval();
  void report();
  void compare();

  ExperimentConfig cfg_;
};

}  // namespace cformer
