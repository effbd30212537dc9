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

#include "cformer/classifier.hpp"

#include <cmath>

#include "json_util.hpp"

namespace cformer {

namespace {

constexpr int kCheckpointVersion = 1;

template <typename F>
void for_each_tensor(MlpParams& p, F&& f) {
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
}

template <typename F>
void for_each_tensor(const MlpParams& p, F&& f) {
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
}

}  // namespace

MlpParams MlpParams::zeros(Eigen::Index d, Eigen::Index h, Eigen::Index c) {
  return {Eigen::MatrixXd::Zero(d, h), Eigen::VectorXd::Zero(h),
          Eigen::MatrixXd::Zero(h, c), Eigen::VectorXd::Zero(c)};
}

MlpParams MlpParams::random(Eigen::Index d, Eigen::Index h, Eigen::Index c,
                            Rng& rng) {
  MlpParams p = zeros(d, h, c);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (Eigen::Index j = 0; j < h; ++j)
    for (Eigen::Index i = 0; i < d; ++i) p.w1(i, j) = s1 * n01(rng);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < h; ++i) p.w2(i, j) = s2 * n01(rng);
  return p;
}

Eigen::Index MlpParams::num_params() const {
  Eigen::Index n = 0;
  for_each_tensor(*this, [&](const auto& t) { n += t.size(); });
  return n;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(num_params());
  Eigen::Index off = 0;
  for_each_tensor(*this, [&](const auto& t) {
    flat.segment(off, t.size()) =
        Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    off += t.size();
  });
  return flat;
}

void MlpParams::assign(const Eigen::VectorXd& flat) {
  require(flat.size() == num_params(), "flat parameter size mismatch");
  Eigen::Index off = 0;
  for_each_tensor(*this, [&](auto& t) {
    Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(off, t.size());
    off += t.size();
  });
}

MlpParams& MlpParams::operator+=(const MlpParams& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  b2 *= s;
  return *this;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

MlpForward forward_cache(const MlpParams& params, const Eigen::VectorXd& x) {
  MlpForward f;
  f.hidden = (params.w1.transpose() * x + params.b1).array().tanh();
  f.probs = softmax(params.w2.transpose() * f.hidden + params.b2);
  return f;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x) {
  return forward_cache(params, x).probs;
}

Eigen::VectorXd smoothed_target(ClassId y, Eigen::Index num_classes,
                                double smoothing) {
  require(smoothing >= 0.0 && smoothing < 1.0, "smoothing must be in [0, 1)");
  require(static_cast<Eigen::Index>(y) < num_classes, "class id out of range");
  Eigen::VectorXd q =
      Eigen::VectorXd::Constant(num_classes, smoothing / static_cast<double>(num_classes));
  q[y] += 1.0 - smoothing;
  return q;
}

double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double loss = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c)
    if (q[c] != 0.0) loss -= q[c] * std::log(p[c]);
  return loss;
}

double ce_smoothed(const Eigen::VectorXd& p, ClassId y, double smoothing) {
  return cross_entropy(p, smoothed_target(y, p.size(), smoothing));
}

MlpGrads backward(const MlpParams& params, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& q) {
  const MlpForward f = forward_cache(params, x);
  const Eigen::VectorXd dz2 = f.probs * q.sum() - q;
  MlpGrads g;
  g.params.w2 = f.hidden * dz2.transpose();
  g.params.b2 = dz2;
  const Eigen::VectorXd dz1 =
      ((params.w2 * dz2).array() * (1.0 - f.hidden.array().square())).matrix();
  g.params.w1 = x * dz1.transpose();
  g.params.b1 = dz1;
  g.input = params.w1 * dz1;
  return g;
}

void adamw_update(Eigen::Ref<Eigen::MatrixXd> param,
                  const Eigen::Ref<const Eigen::MatrixXd>& grad,
                  Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v,
                  std::int64_t step, const AdamWConfig& cfg, double lr) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -= lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps) +
                         cfg.weight_decay * param.array());
}

AdamWState AdamWState::for_params(const MlpParams& p, const AdamWConfig& cfg) {
  AdamWState s;
  s.m = MlpParams::zeros(p.input_dim(), p.hidden_dim(), p.num_classes());
  s.v = s.m;
  s.cfg = cfg;
  return s;
}

void adamw_step(MlpParams& params, const MlpParams& grads, AdamWState& state,
                double lr) {
  ++state.step;
  adamw_update(params.w1, grads.w1, state.m.w1, state.v.w1, state.step, state.cfg, lr);
  adamw_update(params.b1, grads.b1, state.m.b1, state.v.b1, state.step, state.cfg, lr);
  adamw_update(params.w2, grads.w2, state.m.w2, state.v.w2, state.step, state.cfg, lr);
  adamw_update(params.b2, grads.b2, state.m.b2, state.v.b2, state.step, state.cfg, lr);
}

namespace {

nlohmann::json params_to_json(const MlpParams& p) {
  return {{"w1", detail::matrix_to_json(p.w1)},
          {"b1", detail::vector_to_json(p.b1)},
          {"w2", detail::matrix_to_json(p.w2)},
          {"b2", detail::vector_to_json(p.b2)}};
}

MlpParams params_from_json(const nlohmann::json& j, Eigen::Index d,
                           Eigen::Index h, Eigen::Index c) {
  return {detail::matrix_from_json(j.at("w1"), d, h, "w1"),
          detail::vector_from_json(j.at("b1"), h, "b1"),
          detail::matrix_from_json(j.at("w2"), h, c, "w2"),
          detail::vector_from_json(j.at("b2"), c, "b2")};
}

}  // namespace

std::string checkpoint_to_json(const MlpParams& params, const AdamWState& state,
                               std::uint64_t config_hash) {
  nlohmann::json j;
  j["format"] = "cformer-mlp";
  j["version"] = kCheckpointVersion;
  j["config_hash"] = hex64(config_hash);
  j["input_dim"] = params.input_dim();
  j["hidden_dim"] = params.hidden_dim();
  j["num_classes"] = params.num_classes();
  j["params"] = params_to_json(params);
  j["adamw"] = {{"step", state.step},
                {"beta1", state.cfg.beta1},
                {"beta2", state.cfg.beta2},
                {"eps", state.cfg.eps},
                {"weight_decay", state.cfg.weight_decay},
                {"m", params_to_json(state.m)},
                {"v", params_to_json(state.v)}};
  return j.dump() + "\n";
}

void checkpoint_from_json(const std::string& text,
                          std::uint64_t expected_config_hash, MlpParams& params,
                          AdamWState& state) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "cformer-mlp")
      fail(ErrorCode::kParse, "not a classifier checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      fail(ErrorCode::kParse, "unsupported checkpoint version");
    if (j.at("config_hash").get<std::string>() != hex64(expected_config_hash))
      fail(ErrorCode::kConfigMismatch, "checkpoint config hash mismatch");
    const auto d = j.at("input_dim").get<Eigen::Index>();
    const auto h = j.at("hidden_dim").get<Eigen::Index>();
    const auto c = j.at("num_classes").get<Eigen::Index>();
    params = params_from_json(j.at("params"), d, h, c);
    const auto& a = j.at("adamw");
    state.step = a.at("step").get<std::int64_t>();
    state.cfg = {a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                 a.at("eps").get<double>(), a.at("weight_decay").get<double>()};
    state.m = params_from_json(a.at("m"), d, h, c);
    state.v = params_from_json(a.at("v"), d, h, c);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace cformer
