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

#include <Eigen/Dense>

#include "cformer/common.hpp"

namespace cformer {

// Two-layer head: softmax(W2^T tanh(W1^T x + b1) + b2).
struct MlpParams {
  Eigen::MatrixXd w1;  // d x h
  Eigen::VectorXd b1;  // h
  Eigen::MatrixXd w2;  // h x C
  Eigen::VectorXd b2;  // C

  static MlpParams zeros(Eigen::Index d, Eigen::Index h, Eigen::Index c);
  // Gaussian weights scaled by 1/sqrt(fan_in), zero biases.
  static MlpParams random(Eigen::Index d, Eigen::Index h, Eigen::Index c,
                          Rng& rng);

  Eigen::Index input_dim() const { return w1.rows(); }
  Eigen::Index hidden_dim() const { return w1.cols(); }
  Eigen::Index num_classes() const { return w2.cols(); }

  // Flattened view helpers for finite differences and dot products.
  Eigen::Index num_params() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  MlpParams& operator+=(const MlpParams& o);
  MlpParams& operator*=(double s);
};

// Gradients share the parameter layout; `input` holds dLoss/dx.
struct MlpGrads {
  MlpParams params;
  Eigen::VectorXd input;
};

struct MlpForward {
  Eigen::VectorXd hidden;  // tanh activations
  Eigen::VectorXd probs;
};

MlpForward forward_cache(const MlpParams& params, const Eigen::VectorXd& x);
Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// (1 - s) * onehot(y) + s / C.
Eigen::VectorXd smoothed_target(ClassId y, Eigen::Index num_classes,
                                double smoothing);

// -sum_c q_c log p_c.
double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double ce_smoothed(const Eigen::VectorXd& p, ClassId y, double smoothing);

// Exact gradients of cross_entropy(forward(params, x), q).
MlpGrads backward(const MlpParams& params, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& q);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// In-place AdamW on one tensor. `step` is the 1-based step number.
void adamw_update(Eigen::Ref<Eigen::MatrixXd> param,
                  const Eigen::Ref<const Eigen::MatrixXd>& grad,
                  Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v,
                  std::int64_t step, const AdamWConfig& cfg, double lr);

struct AdamWState {
  MlpParams m;
  MlpParams v;
  std::int64_t step = 0;
  AdamWConfig cfg;

  static AdamWState for_params(const MlpParams& p, const AdamWConfig& cfg = {});
};

void adamw_step(MlpParams& params, const MlpParams& grads, AdamWState& state,
                double lr);

std::string checkpoint_to_json(const MlpParams& params, const AdamWState& state,
                               std::uint64_t config_hash);
void checkpoint_from_json(const std::string& text, std::uint64_t expected_config_hash,
                          MlpParams& params, AdamWState& state);

}  // namespace cformer
