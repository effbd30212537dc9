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

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code it checks, beyond model evaluation.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "cformer/classifier.hpp"
#include "cformer/common.hpp"
#include "cformer/encoder.hpp"
#include "cformer/mpl.hpp"

namespace oracle {

using cformer::WordId;
using Docs = std::vector<std::vector<WordId>>;

inline bool contains(const std::vector<WordId>& doc, WordId w) {
  return std::find(doc.begin(), doc.end(), w) != doc.end();
}

// Mean over j < i of log((P(wi, wj) + eps) / P(wj)), document counting.
inline double umass(const Docs& docs, const std::vector<WordId>& words, double eps) {
  const double D = static_cast<double>(docs.size());
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 1; i < words.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double both = 0.0, wj = 0.0;
      for (const auto& d : docs) {
        const bool hi = contains(d, words[i]), hj = contains(d, words[j]);
        both += (hi && hj) ? 1.0 : 0.0;
        wj += hj ? 1.0 : 0.0;
      }
      sum += std::log((both / D + eps) / (wj / D));
      ++pairs;
    }
  return sum / pairs;
}

// Sliding windows enumerated directly from the token strings.
inline Docs windows(const Docs& docs, std::size_t w) {
  Docs out;
  for (const auto& d : docs) {
    if (d.size() <= w) {
      out.push_back(d);
      continue;
    }
    for (std::size_t s = 0; s + w <= d.size(); ++s)
      out.emplace_back(d.begin() + static_cast<std::ptrdiff_t>(s),
                       d.begin() + static_cast<std::ptrdiff_t>(s + w));
  }
  return out;
}

inline double cv(const Docs& docs, const std::vector<WordId>& words, std::size_t window,
                 double eps, double gamma = 1.0) {
  const Docs win = windows(docs, window);
  const double W = static_cast<double>(win.size());
  const std::size_t n = words.size();
  auto p1 = [&](WordId a) {
    double c = 0;
    for (const auto& d : win) c += contains(d, a);
    return c / W;
  };
  auto p2 = [&](WordId a, WordId b) {
    double c = 0;
    for (const auto& d : win) c += contains(d, a) && contains(d, b);
    return c / W;
  };
  std::vector<std::vector<double>> v(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p2(words[i], words[j]) + eps;
      const double npmi = std::log(pij / (p1(words[i]) * p1(words[j]))) / -std::log(pij);
      v[i][j] = npmi < 0 ? -std::pow(-npmi, gamma) : std::pow(npmi, gamma);
    }
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total[j] += v[i][j];
  double score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += v[i][j] * total[j];
      na += v[i][j] * v[i][j];
      nb += total[j] * total[j];
    }
    score += (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
  }
  return score / n;
}

// Central differences of a scalar function of a flat parameter vector.
inline Eigen::VectorXd numeric_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double d = a.norm() * b.norm();
  return d == 0 ? 0.0 : a.dot(b) / d;
}

// Mean top-n precision of learned topics against planted word sets under
// the best topic permutation (exhaustive; K is small).
inline double planted_precision(const std::vector<std::vector<WordId>>& learned_top,
                                const std::vector<std::vector<WordId>>& planted) {
  const std::size_t K = planted.size();
  std::vector<std::size_t> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double hits = 0.0, total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const std::set<WordId> truth(planted[perm[k]].begin(), planted[perm[k]].end());
      for (WordId w : learned_top[k]) hits += truth.count(w);
      total += static_cast<double>(learned_top[k].size());
    }
    best = std::max(best, hits / total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Meta objective: expected gold loss of the student after one plain
// gradient step on hard pseudo-labels drawn from the teacher. The
// expectation is exact, by enumerating every labeling of the unlabeled
// batch, so it is smooth in the teacher parameters.
struct MetaInstance {
  cformer::MlpParams teacher, student;
  std::vector<Eigen::VectorXd> unlabeled_x, gold_x;
  std::vector<cformer::ClassId> gold_y;
  double student_lr = 0.1;
};

// Calls f(labels, probability) for every labeling of the unlabeled batch.
inline void for_each_labeling(
    const MetaInstance& in, const cformer::MlpParams& teacher,
    const std::function<void(const std::vector<cformer::ClassId>&, double)>& f) {
  const std::size_t B = in.unlabeled_x.size();
  const auto C = static_cast<std::size_t>(teacher.num_classes());
  std::vector<Eigen::VectorXd> q;
  for (const auto& x : in.unlabeled_x) q.push_back(cformer::forward(teacher, x));
  std::vector<cformer::ClassId> labels(B, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t i = 0; i < B; ++i) p *= q[i][labels[i]];
    f(labels, p);
    std::size_t i = 0;
    while (i < B && ++labels[i] == C) labels[i++] = 0;
    if (i == B) break;
  }
}

inline cformer::MlpParams sgd_student(const MetaInstance& in,
                                      const std::vector<cformer::ClassId>& labels,
                                      Eigen::VectorXd* pseudo_grad = nullptr) {
  using namespace cformer;
  const std::size_t B = labels.size();
  MlpParams grad = MlpParams::zeros(in.student.input_dim(), in.student.hidden_dim(),
                                    in.student.num_classes());
  for (std::size_t i = 0; i < B; ++i) {
    const Eigen::VectorXd q = smoothed_target(labels[i], in.student.num_classes(), 0.0);
    MlpGrads g = backward(in.student, in.unlabeled_x[i], q);
    g.params *= 1.0 / static_cast<double>(B);
    grad += g.params;
  }
  if (pseudo_grad) *pseudo_grad = grad.flatten();
  MlpParams after = in.student;
  grad *= -in.student_lr;
  after += grad;
  return after;
}

inline double gold_loss(const MetaInstance& in, const cformer::MlpParams& model) {
  double loss = 0.0;
  for (std::size_t i = 0; i < in.gold_x.size(); ++i)
    loss += cformer::ce_smoothed(cformer::forward(model, in.gold_x[i]), in.gold_y[i], 0.0);
  return loss / static_cast<double>(in.gold_x.size());
}

inline double meta_objective(const MetaInstance& in, const cformer::MlpParams& teacher) {
  double total = 0.0;
  for_each_labeling(in, teacher, [&](const std::vector<cformer::ClassId>& y, double p) {
    total += p * gold_loss(in, sgd_student(in, y));
  });
  return total;
}

inline Eigen::VectorXd meta_gradient_fd(const MetaInstance& in, double h = 1e-6) {
  cformer::MlpParams t = in.teacher;
  return numeric_grad(
      [&](const Eigen::VectorXd& flat) {
        t.assign(flat);
        return meta_objective(in, t);
      },
      in.teacher.flatten(), h);
}

// Small random instance: d=4, h=3, C=2, batches of 4.
inline MetaInstance random_meta_instance(cformer::Rng& rng) {
  using namespace cformer;
  const auto rand_vec = [&](Eigen::Index n, double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * (2 * uniform01(rng) - 1);
    return v;
  };
  MetaInstance in;
  in.teacher = MlpParams::zeros(4, 3, 2);
  in.teacher.assign(rand_vec(in.teacher.num_params(), 1.0));
  in.student = MlpParams::zeros(4, 3, 2);
  in.student.assign(rand_vec(in.student.num_params(), 1.0));
  for (int i = 0; i < 4; ++i) {
    in.unlabeled_x.push_back(rand_vec(4, 1.5));
    in.gold_x.push_back(rand_vec(4, 1.5));
    in.gold_y.push_back(static_cast<ClassId>(uniform_index(rng, 2)));
  }
  return in;
}

// The library's first-order teacher gradient, averaged over the same
// labeling distribution the meta objective integrates over.
inline Eigen::VectorXd first_order_expectation(const MetaInstance& in) {
  using namespace cformer;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(in.teacher.num_params());
  for_each_labeling(in, in.teacher, [&](const std::vector<ClassId>& y, double p) {
    const BatchGrad pseudo = student_pseudo_grad(in.student, in.unlabeled_x, y, 0.0);
    const MlpParams after = sgd_student(in, y);
    const MplGrad g = mpl_teacher_grad(in.teacher, after, pseudo, in.gold_x, in.gold_y,
                                       in.unlabeled_x, y, in.student_lr);
    total += p * g.teacher.head.flatten();
  });
  return total;
}

}  // namespace oracle
