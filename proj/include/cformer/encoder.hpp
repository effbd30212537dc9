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

#include <Eigen/Dense>

#include "cformer/classifier.hpp"
#include "cformer/corpus.hpp"
#include "cformer/masking.hpp"

namespace cformer {

struct Embeddings {
  Eigen::MatrixXd input;   // V x d, the table documents are embedded with
  Eigen::MatrixXd output;  // V x d, prediction projection

  static Embeddings random(Eigen::Index vocab_size, Eigen::Index dim,
                           double stddev, Rng& rng);

  Eigen::Index vocab_size() const { return input.rows(); }
  Eigen::Index dim() const { return input.cols(); }
};

struct EncoderConfig {
  Eigen::Index dim = 16;
  std::size_t context = 5;
  std::size_t epochs = 30;
  std::size_t batch_docs = 8;
  double lr = 1e-2;
  double init_std = 0.01;
  AdamWConfig adamw{0.9, 0.999, 1e-8, 0.0};
  std::uint64_t seed = 0;
};

struct MlmLoss {
  double sum = 0.0;        // summed cross-entropy over scored positions
  std::size_t count = 0;   // masked positions with non-empty context
};

// Context vector of a masked position: mean input row of the unmasked
// tokens within +-context. Masked positions without context are skipped.
// Gradients of the summed loss are accumulated into `grad` when non-null.
MlmLoss mlm_loss(const Embeddings& emb, const MaskedExample& example,
                 std::size_t context, Embeddings* grad);

// Trains the embedding tables with AdamW on masked-word prediction. Masks
// are re-drawn every epoch. `epoch_losses`, when given, receives the mean
// loss per epoch.
Embeddings pretrain_mlm(const std::vector<Document>& docs, std::size_t vocab_size,
                        const MaskingPolicy& policy, const EncoderConfig& cfg,
                        std::vector<double>* epoch_losses = nullptr);

Eigen::VectorXd embed_document(std::span<const WordId> tokens,
                               const Eigen::MatrixXd& input_table);
inline Eigen::VectorXd embed_document(std::span<const WordId> tokens,
                                      const Embeddings& emb) {
  return embed_document(tokens, emb.input);
}

std::string embeddings_to_json(const Embeddings& emb, std::uint64_t vocab_hash);
Embeddings embeddings_from_json(const std::string& text,
                                std::uint64_t expected_vocab_hash);

}  // namespace cformer
