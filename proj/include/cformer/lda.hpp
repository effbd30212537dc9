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

#include <Eigen/Dense>

#include "cformer/common.hpp"

namespace cformer {

using TokenLists = std::vector<std::vector<WordId>>;

struct LdaConfig {
  std::size_t num_topics = 10;
  // Non-positive alpha selects the 50/K heuristic.
  double alpha = -1.0;
  double beta = 0.01;
  std::size_t sweeps = 500;
  std::size_t burn_in = 200;
  // Post-burn-in sweeps between estimate samples.
  std::size_t sample_lag = 5;
  std::uint64_t seed = 0;

  double effective_alpha() const {
    return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(num_topics);
  }
};

struct LdaModel {
  std::size_t num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Eigen::MatrixXd phi;    // K x V, rows sum to 1
  Eigen::MatrixXd theta;  // D x K, rows sum to 1
  Eigen::VectorXd marginal_word_prob;  // V
  std::uint64_t vocab_hash = 0;

  std::size_t vocab_size() const { return static_cast<std::size_t>(phi.cols()); }
};

// Collapsed Gibbs sampler state. Counts are kept consistent with `z` after
// every token update.
class GibbsSampler {
 public:
  GibbsSampler(const TokenLists& docs, std::size_t vocab_size,
               std::size_t num_topics, double alpha, double beta,
               std::uint64_t seed);
  // The sampler keeps a reference to `docs`.
  GibbsSampler(TokenLists&&, std::size_t, std::size_t, double, double,
               std::uint64_t) = delete;

  void sweep();

  std::size_t num_topics() const { return num_topics_; }
  const std::vector<std::vector<std::uint32_t>>& assignments() const { return z_; }
  std::uint32_t doc_topic_count(std::size_t d, std::size_t k) const {
    return n_dk_[d * num_topics_ + k];
  }
  std::uint32_t topic_word_count(std::size_t k, WordId w) const {
    return n_wk_[static_cast<std::size_t>(w) * num_topics_ + k];
  }
  std::uint64_t topic_total(std::size_t k) const { return n_k_[k]; }

  // Smoothed count ratios at the current state.
  Eigen::MatrixXd phi_estimate() const;
  Eigen::MatrixXd theta_estimate() const;

 private:
  const TokenLists& docs_;
  std::size_t vocab_size_;
  std::size_t num_topics_;
  double alpha_;
  double beta_;
  Rng rng_;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<std::uint32_t> n_dk_;  // D x K
  std::vector<std::uint32_t> n_wk_;  // V x K
  std::vector<std::uint64_t> n_k_;
  std::vector<double> weights_;
};

LdaModel fit_lda(const TokenLists& docs, std::size_t vocab_size,
                 const LdaConfig& cfg);

// The n words with largest phi_kw, descending, ties by ascending id.
std::vector<WordId> topic_top_words(const LdaModel& model, std::size_t topic,
                                    std::size_t n);

// Document-completion estimate: topic mixtures are folded in on the first
// half of each document with phi fixed, then the second half is scored.
// Returns the mean log-likelihood per scored token.
double heldout_log_likelihood(const LdaModel& model, const TokenLists& docs,
                              std::size_t fold_in_sweeps, std::uint64_t seed);

std::string lda_to_json(const LdaModel& model);
// Throws kConfigMismatch if the stored vocabulary hash differs.
LdaModel lda_from_json(const std::string& text, std::uint64_t expected_vocab_hash);

}  // namespace cformer
