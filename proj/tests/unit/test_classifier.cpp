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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "cformer/classifier.hpp"

using namespace cformer;

namespace {

Eigen::VectorXd random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * (2 * uniform01(rng) - 1);
  return v;
}

Eigen::VectorXd random_dist(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v = random_vec(rng, n).array().abs() + 0.05;
  return v / v.sum();
}

MlpParams scaled_random(Rng& rng, Eigen::Index d, Eigen::Index h, Eigen::Index c) {
  MlpParams p = MlpParams::zeros(d, h, c);
  p.assign(random_vec(rng, p.num_params()));
  return p;
}

}  // namespace

TEST_CASE("forward is a probability vector") {
  const MlpParams zero = MlpParams::zeros(3, 4, 5);
  CHECK(forward(zero, Eigen::VectorXd::Ones(3)).isApprox(Eigen::VectorXd::Constant(5, 0.2)));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    MlpParams p = scaled_random(rng, 6, 5, 4);
    const Eigen::VectorXd x = random_vec(rng, 6, 3.0);
    const Eigen::VectorXd out = forward(p, x);
    CHECK(std::abs(out.sum() - 1.0) < 1e-9);
    CHECK((out.array() > 0).all());
    p.b2.array() += 7.5;
    CHECK((forward(p, x) - out).norm() < 1e-12);
  }
}

TEST_CASE("smoothed cross-entropy") {
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
  for (ClassId y = 0; y < 4; ++y)
    CHECK(ce_smoothed(uniform, y, 0.15) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  Eigen::VectorXd sharp = Eigen::VectorXd::Constant(4, 1e-12);
  sharp[2] = 1.0 - 3e-12;
  CHECK(ce_smoothed(sharp, 2, 0.0) < 1e-10);
  const Eigen::VectorXd q = smoothed_target(1, 4, 0.15);
  CHECK(q[1] == doctest::Approx(0.85 + 0.0375));
  CHECK(q[0] == doctest::Approx(0.0375));

  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd p = random_dist(rng, 5);
    const ClassId y = static_cast<ClassId>(uniform_index(rng, 5));
    const Eigen::VectorXd t = smoothed_target(y, 5, 0.15);
    const double entropy = cross_entropy(t, t);
    CHECK(ce_smoothed(p, y, 0.15) >= entropy - 1e-12);
    CHECK(cross_entropy(p, t) == doctest::Approx(ce_smoothed(p, y, 0.15)));
  }
}

TEST_CASE("backward matches finite differences") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const MlpParams p = scaled_random(rng, 4, 3, 3);
    const Eigen::VectorXd x = random_vec(rng, 4, 2.0);
    const Eigen::VectorXd q = random_dist(rng, 3);
    const MlpGrads g = backward(p, x, q);
    const Eigen::VectorXd fd_params = oracle::numeric_grad(
        [&](const Eigen::VectorXd& flat) {
          MlpParams probe = p;
          probe.assign(flat);
          return cross_entropy(forward(probe, x), q);
        },
        p.flatten());
    CHECK(oracle::relative_error(g.params.flatten(), fd_params) < 1e-4);
    const Eigen::VectorXd fd_input = oracle::numeric_grad(
        [&](const Eigen::VectorXd& xi) { return cross_entropy(forward(p, xi), q); }, x);
    CHECK(oracle::relative_error(g.input, fd_input) < 1e-4);
  }
}

TEST_CASE("gradient vanishes when the target equals the prediction") {
  Rng rng(4);
  const MlpParams p = scaled_random(rng, 5, 4, 3);
  const Eigen::VectorXd x = random_vec(rng, 5);
  const MlpGrads g = backward(p, x, forward(p, x));
  CHECK(g.params.flatten().norm() < 1e-12);
  CHECK(g.input.norm() < 1e-12);
}

TEST_CASE("gradient of a doubled loss doubles") {
  Rng rng(5);
  const MlpParams p = scaled_random(rng, 5, 4, 3);
  const Eigen::VectorXd x = random_vec(rng, 5);
  const Eigen::VectorXd q = random_dist(rng, 3);
  MlpParams sum = backward(p, x, q).params;
  sum += backward(p, x, q).params;
  MlpParams twice = backward(p, x, q).params;
  twice *= 2.0;
  CHECK((sum.flatten() - twice.flatten()).norm() < 1e-14);
}

TEST_CASE("AdamW update rules") {
  Rng rng(6);
  const MlpParams start = scaled_random(rng, 3, 2, 2);
  const MlpParams zero = MlpParams::zeros(3, 2, 2);

  SUBCASE("zero gradient without decay is a fixed point") {
    MlpParams p = start;
    AdamWState s = AdamWState::for_params(p, {0.9, 0.999, 1e-8, 0.0});
    for (int i = 0; i < 10; ++i) adamw_step(p, zero, s, 0.1);
    CHECK(p.flatten() == start.flatten());
    CHECK(s.step == 10);
  }
  SUBCASE("zero gradient with decay shrinks geometrically") {
    MlpParams p = start;
    AdamWState s = AdamWState::for_params(p, {0.9, 0.999, 1e-8, 0.01});
    for (int i = 0; i < 5; ++i) adamw_step(p, zero, s, 0.1);
    CHECK(p.flatten().isApprox(start.flatten() * std::pow(1 - 0.1 * 0.01, 5), 1e-14));
  }
  SUBCASE("constant gradient gives steps of size lr against its sign") {
    MlpParams p = start;
    AdamWState s = AdamWState::for_params(p, {0.9, 0.999, 1e-8, 0.0});
    MlpParams g = zero;
    g.assign(random_vec(rng, g.num_params()));
    Eigen::VectorXd before;
    for (int i = 0; i < 1000; ++i) {
      before = p.flatten();
      adamw_step(p, g, s, 1e-3);
    }
    const Eigen::VectorXd step = p.flatten() - before;
    const Eigen::VectorXd expected = -1e-3 * g.flatten().array().sign().matrix();
    CHECK((step - expected).lpNorm<Eigen::Infinity>() < 1e-8);
  }
  SUBCASE("zero learning rate is the identity") {
    MlpParams p = start;
    AdamWState s = AdamWState::for_params(p);
    MlpParams g = zero;
    g.assign(random_vec(rng, g.num_params()));
    adamw_step(p, g, s, 0.0);
    CHECK(p.flatten() == start.flatten());
  }
}

TEST_CASE("checkpoint round trip") {
  Rng rng(7);
  MlpParams p = scaled_random(rng, 3, 4, 2);
  AdamWState s = AdamWState::for_params(p);
  MlpParams g = MlpParams::zeros(3, 4, 2);
  g.assign(random_vec(rng, g.num_params()));
  adamw_step(p, g, s, 0.01);
  const std::string text = checkpoint_to_json(p, s, 99);
  MlpParams p2;
  AdamWState s2;
  checkpoint_from_json(text, 99, p2, s2);
  CHECK(p2.flatten() == p.flatten());
  CHECK(s2.m.flatten() == s.m.flatten());
  CHECK(s2.v.flatten() == s.v.flatten());
  CHECK(s2.step == 1);
  try {
    checkpoint_from_json(text, 100, p2, s2);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigMismatch);
  }
  CHECK_THROWS_AS(checkpoint_from_json("{}", 99, p2, s2), Error);
}
