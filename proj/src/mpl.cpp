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

#include "cformer/mpl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cformer {

namespace {

// Seed-derivation tags.
constexpr std::uint64_t kTagTeacherInit = 0x7ea;
constexpr std::uint64_t kTagStudentInit = 0x57d;
constexpr std::uint64_t kTagGoldSampler = 0x901d;
constexpr std::uint64_t kTagUnlabeledSampler = 0x0a1;
constexpr std::uint64_t kTagAugment = 0xa06;
constexpr std::uint64_t kTagFinetune = 0xf17e;

}  // namespace

void TrainerConfig::validate() const {
  require(temperature > 0.0, "temperature must be positive");
  require(conf_threshold >= 0.0 && conf_threshold <= 1.0,
          "conf_threshold must be in [0, 1]");
  require(batch_gold >= 1, "batch_gold must be >= 1");
  require(batch_unlabeled % batch_gold == 0,
          "batch_unlabeled must be a multiple of batch_gold");
  require(smoothing >= 0.0 && smoothing < 1.0, "smoothing must be in [0, 1)");
  require(augment_prob >= 0.0 && augment_prob <= 1.0,
          "augment_prob must be in [0, 1]");
  require(augment_k >= 1, "augment_k must be >= 1");
  require(hidden >= 1, "hidden must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(finetune_batch >= 1, "finetune_batch must be >= 1");
}

double lambda_u_at(std::size_t step, std::size_t ramp_steps) {
  if (ramp_steps == 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / static_cast<double>(ramp_steps));
}

Eigen::VectorXd sharpen(const Eigen::VectorXd& l, double t) {
  require(t > 0.0, "temperature must be positive");
  require(l.size() > 0, "cannot sharpen an empty vector");
  require((l.array() >= 0.0).all() && l.sum() > 0.0,
          "sharpen needs non-negative weights with a positive sum");
  if (t == 1.0) return l / l.sum();
  // Work in log space so small temperatures do not underflow.
  Eigen::VectorXd out(l.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < l.size(); ++i)
    if (l[i] > 0.0) max_log = std::max(max_log, std::log(l[i]));
  for (Eigen::Index i = 0; i < l.size(); ++i)
    out[i] = l[i] > 0.0 ? std::exp((std::log(l[i]) - max_log) / t) : 0.0;
  return out / out.sum();
}

ClassId hard_label(const Eigen::VectorXd& l) {
  require(l.size() > 0, "hard_label of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < l.size(); ++i)
    if (l[i] > l[best]) best = i;
  return static_cast<ClassId>(best);
}

Eigen::VectorXd TextClassifier::embed(std::span<const WordId> tokens) const {
  return embed_document(tokens, embeddings);
}

Eigen::VectorXd TextClassifier::predict_proba(std::span<const WordId> tokens) const {
  return forward(head, embed(tokens));
}

ClassId TextClassifier::predict(std::span<const WordId> tokens) const {
  return hard_label(predict_proba(tokens));
}

NeighborTable nearest_neighbors(const Eigen::MatrixXd& embeddings, std::size_t k) {
  const auto V = static_cast<std::size_t>(embeddings.rows());
  const std::size_t kk = std::min(k, V > 0 ? V - 1 : 0);
  Eigen::MatrixXd unit = embeddings;
  for (Eigen::Index r = 0; r < unit.rows(); ++r) {
    const double n = unit.row(r).norm();
    if (n > 0.0) unit.row(r) /= n;
  }
  const Eigen::MatrixXd sim = unit * unit.transpose();
  NeighborTable table(V);
  std::vector<WordId> ids;
  for (std::size_t w = 0; w < V; ++w) {
    ids.clear();
    for (std::size_t u = 0; u < V; ++u)
      if (u != w) ids.push_back(static_cast<WordId>(u));
    const auto row = sim.row(static_cast<Eigen::Index>(w));
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(kk),
                      ids.end(), [&](WordId a, WordId b) {
                        if (row[a] != row[b]) return row[a] > row[b];
                        return a < b;
                      });
    table[w].assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(kk));
  }
  return table;
}

std::vector<WordId> augment(std::span<const WordId> tokens,
                            const NeighborTable& neighbors, double prob,
                            std::uint64_t seed) {
  require(prob >= 0.0 && prob <= 1.0, "augment probability must be in [0, 1]");
  Rng rng(seed);
  std::vector<WordId> out(tokens.begin(), tokens.end());
  for (auto& w : out) {
    // Both draws happen for every token so the stream does not depend on prob.
    const double u = uniform01(rng);
    const auto& nb = neighbors.at(w);
    const std::size_t pick = nb.empty() ? 0 : uniform_index(rng, nb.size());
    if (u < prob && !nb.empty()) w = nb[pick];
  }
  return out;
}

std::vector<WordId> augment(std::span<const WordId> tokens, const Embeddings& emb,
                            double prob, std::size_t k, std::uint64_t seed) {
  return augment(tokens, nearest_neighbors(emb.input, k), prob, seed);
}

double dot(const MlpParams& a, const MlpParams& b) {
  return (a.w1.array() * b.w1.array()).sum() + a.b1.dot(b.b1) +
         (a.w2.array() * b.w2.array()).sum() + a.b2.dot(b.b2);
}

BatchGrad batch_ce_grad(const MlpParams& head,
                        const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<Eigen::VectorXd>& targets,
                        const std::vector<double>& weights) {
  require(xs.size() == targets.size() && xs.size() == weights.size(),
          "batch_ce_grad: misaligned batch");
  BatchGrad g;
  g.head = MlpParams::zeros(head.input_dim(), head.hidden_dim(), head.num_classes());
  g.dx.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (weights[i] == 0.0) {
      g.dx[i] = Eigen::VectorXd::Zero(head.input_dim());
      continue;
    }
    g.loss += weights[i] * cross_entropy(forward(head, xs[i]), targets[i]);
    MlpGrads item = backward(head, xs[i], targets[i]);
    item.params *= weights[i];
    g.head += item.params;
    g.dx[i] = weights[i] * item.input;
  }
  return g;
}

TeacherLosses teacher_losses(const MlpParams& teacher,
                             const std::vector<Eigen::VectorXd>& gold_x,
                             const std::vector<ClassId>& gold_y,
                             const std::vector<Eigen::VectorXd>& unlabeled_x,
                             const std::vector<Eigen::VectorXd>& augmented_x,
                             const TrainerConfig& cfg) {
  require(!gold_x.empty() && gold_x.size() == gold_y.size(),
          "teacher_losses: bad gold batch");
  require(unlabeled_x.size() == augmented_x.size(),
          "teacher_losses: augmented batch must align with unlabeled batch");
  const auto C = teacher.num_classes();
  TeacherLosses out;

  std::vector<Eigen::VectorXd> targets;
  for (ClassId y : gold_y) targets.push_back(smoothed_target(y, C, cfg.smoothing));
  out.sup = batch_ce_grad(teacher, gold_x, targets,
                          std::vector<double>(gold_x.size(), 1.0 / gold_x.size()));
  out.loss_sup = out.sup.loss;

  const std::size_t nu = unlabeled_x.size();
  std::vector<Eigen::VectorXd> sharp(nu);
  std::vector<double> weights(nu, 0.0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < nu; ++i) {
    out.unlabeled_probs.push_back(forward(teacher, unlabeled_x[i]));
    const auto& p = out.unlabeled_probs.back();
    out.pseudo_labels.push_back(hard_label(p));
    sharp[i] = sharpen(p, cfg.temperature);
    if (p.maxCoeff() > cfg.conf_threshold) {
      weights[i] = 1.0 / static_cast<double>(nu);
      ++kept;
    }
  }
  out.cons = batch_ce_grad(teacher, augmented_x, sharp, weights);
  out.loss_cons = out.cons.loss;
  out.kept_frac = nu ? static_cast<double>(kept) / static_cast<double>(nu) : 0.0;
  return out;
}

BatchGrad student_pseudo_grad(const MlpParams& student,
                              const std::vector<Eigen::VectorXd>& augmented_x,
                              const std::vector<ClassId>& pseudo_labels,
                              double smoothing) {
  require(!augmented_x.empty() && augmented_x.size() == pseudo_labels.size(),
          "student batch misaligned");
  std::vector<Eigen::VectorXd> targets;
  for (ClassId y : pseudo_labels)
    targets.push_back(smoothed_target(y, student.num_classes(), smoothing));
  return batch_ce_grad(
      student, augmented_x, targets,
      std::vector<double>(augmented_x.size(), 1.0 / augmented_x.size()));
}

BatchGrad gold_grad(const MlpParams& model,
                    const std::vector<Eigen::VectorXd>& gold_x,
                    const std::vector<ClassId>& gold_y) {
  return student_pseudo_grad(model, gold_x, gold_y, 0.0);
}

StudentStep student_step(MlpParams& student, AdamWState& opt,
                         const std::vector<Eigen::VectorXd>& augmented_x,
                         const std::vector<ClassId>& pseudo_labels,
                         double smoothing, double lr) {
  StudentStep out;
  out.pseudo = student_pseudo_grad(student, augmented_x, pseudo_labels, smoothing);
  out.loss = out.pseudo.loss;
  adamw_step(student, out.pseudo.head, opt, lr);
  return out;
}

BatchGrad mpl_teacher_grad_for_h(const MlpParams& teacher, double h,
                                 const std::vector<Eigen::VectorXd>& unlabeled_x,
                                 const std::vector<ClassId>& pseudo_labels) {
  require(unlabeled_x.size() == pseudo_labels.size(), "MPL batch misaligned");
  std::vector<Eigen::VectorXd> targets;
  for (ClassId y : pseudo_labels)
    targets.push_back(smoothed_target(y, teacher.num_classes(), 0.0));
  BatchGrad g = batch_ce_grad(
      teacher, unlabeled_x, targets,
      std::vector<double>(unlabeled_x.size(), h / unlabeled_x.size()));
  return g;
}

MplGrad mpl_teacher_grad(const MlpParams& teacher,
                         const MlpParams& student_after,
                         const BatchGrad& pseudo_grad_before,
                         const std::vector<Eigen::VectorXd>& gold_x,
                         const std::vector<ClassId>& gold_y,
                         const std::vector<Eigen::VectorXd>& unlabeled_x,
                         const std::vector<ClassId>& pseudo_labels,
                         double student_lr) {
  MplGrad out;
  const BatchGrad gold = gold_grad(student_after, gold_x, gold_y);
  out.gold_loss_after = gold.loss;
  out.h = student_lr * dot(gold.head, pseudo_grad_before.head);
  out.teacher = mpl_teacher_grad_for_h(teacher, out.h, unlabeled_x, pseudo_labels);
  return out;
}

std::string history_to_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream out;
  out << "step,loss_sup,loss_cons,loss_mpl,lambda_u,kept_frac,dev_acc\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_double(r.loss_sup) << ','
        << format_double(r.loss_cons) << ',' << format_double(r.loss_mpl) << ','
        << format_double(r.lambda_u) << ',' << format_double(r.kept_frac) << ',';
    if (r.dev_acc) out << format_double(*r.dev_acc);
    out << '\n';
  }
  return out.str();
}

BatchSampler::BatchSampler(std::size_t n, std::uint64_t seed)
    : order_(n), pos_(n), rng_(seed) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch) {
  require(!order_.empty(), "cannot sample from an empty set");
  std::vector<std::size_t> out;
  out.reserve(batch);
  while (out.size() < batch) {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    out.push_back(order_[pos_++]);
  }
  return out;
}

namespace {

// One side of the teacher/student pair with its optimizer state.
struct Party {
  TextClassifier model;
  AdamWState head_opt;
  Eigen::MatrixXd emb_m, emb_v;
  std::int64_t emb_step = 0;

  Party(const Embeddings& emb, MlpParams head, const AdamWConfig& adamw)
      : model{emb.input, std::move(head)},
        head_opt(AdamWState::for_params(model.head, adamw)),
        emb_m(Eigen::MatrixXd::Zero(emb.input.rows(), emb.input.cols())),
        emb_v(emb_m) {}

  std::vector<Eigen::VectorXd> embed_all(
      const std::vector<const std::vector<WordId>*>& docs) const {
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(docs.size());
    for (const auto* d : docs) xs.push_back(model.embed(*d));
    return xs;
  }

  void step(const MlpParams& head_grad, const Eigen::MatrixXd* emb_grad,
            double lr_head, double lr_emb) {
    adamw_step(model.head, head_grad, head_opt, lr_head);
    if (emb_grad) {
      ++emb_step;
      adamw_update(model.embeddings, *emb_grad, emb_m, emb_v, emb_step,
                   head_opt.cfg, lr_emb);
    }
  }
};

// Chain rule through mean pooling: every token row receives dx / |doc|.
void scatter_input_grad(const std::vector<const std::vector<WordId>*>& docs,
                        const std::vector<Eigen::VectorXd>& dx,
                        Eigen::MatrixXd& grad) {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(docs[i]->size());
    for (WordId w : *docs[i]) grad.row(w) += inv * dx[i].transpose();
  }
}

double warmup_factor(std::size_t it, std::size_t warmup) {
  if (warmup == 0) return 1.0;
  return std::min(1.0, static_cast<double>(it + 1) / static_cast<double>(warmup));
}

bool is_eval_step(std::size_t it, const TrainerConfig& cfg) {
  return (it + 1) % cfg.eval_every == 0 || it + 1 == cfg.max_steps;
}

// Early stopping on dev accuracy; keeps the best checkpoint.
struct DevSelector {
  double best = -1.0;
  std::size_t bad = 0;
  std::optional<TextClassifier> best_model;

  // Returns true when training should stop.
  bool update(double acc, const TextClassifier& model, const TrainerConfig& cfg) {
    if (acc > best + cfg.early_stop_delta)
      bad = 0;
    else
      ++bad;
    if (acc > best) {
      best = acc;
      best_model = model;
    }
    return bad >= cfg.early_stop_patience;
  }
};

std::vector<ClassId> labels_of(const std::vector<Document>& docs,
                               const std::vector<std::size_t>& idx) {
  std::vector<ClassId> y;
  for (std::size_t i : idx) y.push_back(*docs[i].label);
  return y;
}

}  // namespace

TrainResult train(const SplitSet& splits, const Embeddings& emb,
                  std::size_t num_classes, const TrainerConfig& cfg) {
  cfg.validate();
  if (splits.gold.empty() || splits.dev.empty())
    fail(ErrorCode::kData, "training needs non-empty gold and dev sets");
  const bool use_unlabeled = cfg.batch_unlabeled > 0;
  if (use_unlabeled && splits.unlabeled.empty())
    fail(ErrorCode::kData, "training needs a non-empty unlabeled set");
  require(num_classes >= 2, "need at least 2 classes");

  const auto d = emb.dim();
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  const auto C = static_cast<Eigen::Index>(num_classes);
  Rng init_t(derive_seed(cfg.seed, kTagTeacherInit));
  Rng init_s(derive_seed(cfg.seed, kTagStudentInit));
  Party teacher(emb, MlpParams::random(d, h, C, init_t), cfg.adamw);
  Party student(emb, MlpParams::random(d, h, C, init_s), cfg.adamw);

  const NeighborTable neighbors =
      use_unlabeled ? nearest_neighbors(emb.input, cfg.augment_k) : NeighborTable{};
  BatchSampler gold_sampler(splits.gold.size(), derive_seed(cfg.seed, kTagGoldSampler));
  std::optional<BatchSampler> unl_sampler;
  if (use_unlabeled)
    unl_sampler.emplace(splits.unlabeled.size(),
                        derive_seed(cfg.seed, kTagUnlabeledSampler));

  const auto V = emb.input.rows();
  Eigen::MatrixXd t_emb_grad, s_emb_grad;
  TrainResult result;
  DevSelector selector;
  std::vector<std::vector<WordId>> aug_tokens(cfg.batch_unlabeled);

  for (std::size_t it = 0; it < cfg.max_steps; ++it) {
    const double warm = warmup_factor(it, cfg.warmup_steps);
    const double lam = lambda_u_at(it, cfg.lambda_u_ramp_steps);
    HistoryRow row;
    row.step = it;
    row.lambda_u = lam;

    const auto gi = gold_sampler.next(cfg.batch_gold);
    std::vector<const std::vector<WordId>*> gold_docs, unl_docs, aug_docs;
    for (std::size_t i : gi) gold_docs.push_back(&splits.gold[i].tokens);
    const auto gold_y = labels_of(splits.gold, gi);
    if (use_unlabeled) {
      const auto ui = unl_sampler->next(cfg.batch_unlabeled);
      for (std::size_t j = 0; j < ui.size(); ++j) {
        const auto& src = splits.unlabeled[ui[j]].tokens;
        unl_docs.push_back(&src);
        aug_tokens[j] = augment(src, neighbors, cfg.augment_prob,
                                derive_seed(cfg.seed, kTagAugment,
                                            it * cfg.batch_unlabeled + j));
        aug_docs.push_back(&aug_tokens[j]);
      }
    }

    const auto gx_t = teacher.embed_all(gold_docs);
    const auto ux_t = teacher.embed_all(unl_docs);
    const auto ax_t = teacher.embed_all(aug_docs);
    TeacherLosses tl = teacher_losses(teacher.model.head, gx_t, gold_y, ux_t,
                                      ax_t, cfg);
    row.loss_sup = tl.loss_sup;
    row.loss_cons = tl.loss_cons;
    row.kept_frac = tl.kept_frac;

    MlpParams teacher_grad = tl.sup.head;
    MlpParams cons = tl.cons.head;
    cons *= lam;
    teacher_grad += cons;
    if (cfg.train_embeddings) {
      t_emb_grad = Eigen::MatrixXd::Zero(V, d);
      scatter_input_grad(gold_docs, tl.sup.dx, t_emb_grad);
      std::vector<Eigen::VectorXd> scaled = tl.cons.dx;
      for (auto& v : scaled) v *= lam;
      scatter_input_grad(aug_docs, scaled, t_emb_grad);
    }

    if (use_unlabeled) {
      const double lr_s = cfg.lr_head * warm;
      const double lr_s_emb = cfg.lr_encoder * warm;
      const auto ax_s = student.embed_all(aug_docs);
      const BatchGrad pseudo =
          student_pseudo_grad(student.model.head, ax_s, tl.pseudo_labels, cfg.smoothing);
      if (cfg.train_embeddings) {
        s_emb_grad = Eigen::MatrixXd::Zero(V, d);
        scatter_input_grad(aug_docs, pseudo.dx, s_emb_grad);
      }
      student.step(pseudo.head, cfg.train_embeddings ? &s_emb_grad : nullptr, lr_s,
                   lr_s_emb);

      const auto gx_s = student.embed_all(gold_docs);
      const BatchGrad gold = gold_grad(student.model.head, gx_s, gold_y);
      row.loss_mpl = gold.loss;
      if (cfg.use_mpl) {
        double h_val = lr_s * dot(gold.head, pseudo.head);
        if (cfg.train_embeddings) {
          Eigen::MatrixXd gold_emb = Eigen::MatrixXd::Zero(V, d);
          scatter_input_grad(gold_docs, gold.dx, gold_emb);
          h_val += lr_s_emb * (gold_emb.array() * s_emb_grad.array()).sum();
        }
        const BatchGrad mpl = mpl_teacher_grad_for_h(teacher.model.head, h_val,
                                                     ux_t, tl.pseudo_labels);
        teacher_grad += mpl.head;
        if (cfg.train_embeddings) scatter_input_grad(unl_docs, mpl.dx, t_emb_grad);
      }
    }
    teacher.step(teacher_grad, cfg.train_embeddings ? &t_emb_grad : nullptr,
                 cfg.lr_head * warm, cfg.lr_encoder * warm);

    bool stop = false;
    if (is_eval_step(it, cfg)) {
      const TextClassifier& selected = use_unlabeled ? student.model : teacher.model;
      const double acc = evaluate(selected, splits.dev, num_classes).accuracy;
      row.dev_acc = acc;
      stop = selector.update(acc, selected, cfg);
    }
    result.history.push_back(row);
    result.steps_run = it + 1;
    if (stop) break;
  }

  result.teacher = teacher.model;
  result.final_student = use_unlabeled ? student.model : teacher.model;
  result.student = selector.best_model ? *selector.best_model : result.final_student;
  result.best_dev_acc = selector.best;
  return result;
}

TrainResult train_supervised(const std::vector<Document>& gold,
                             const std::vector<Document>& dev,
                             const Embeddings& emb, std::size_t num_classes,
                             const TrainerConfig& cfg) {
  cfg.validate();
  if (gold.empty() || dev.empty())
    fail(ErrorCode::kData, "training needs non-empty gold and dev sets");
  const auto d = emb.dim();
  Rng init(derive_seed(cfg.seed, kTagTeacherInit));
  Party model(emb,
              MlpParams::random(d, static_cast<Eigen::Index>(cfg.hidden),
                                static_cast<Eigen::Index>(num_classes), init),
              cfg.adamw);
  BatchSampler sampler(gold.size(), derive_seed(cfg.seed, kTagGoldSampler));
  TrainResult result;
  DevSelector selector;
  Eigen::MatrixXd emb_grad;
  for (std::size_t it = 0; it < cfg.max_steps; ++it) {
    const double warm = warmup_factor(it, cfg.warmup_steps);
    const auto gi = sampler.next(cfg.batch_gold);
    std::vector<const std::vector<WordId>*> docs;
    std::vector<Eigen::VectorXd> targets;
    for (std::size_t i : gi) {
      docs.push_back(&gold[i].tokens);
      targets.push_back(smoothed_target(*gold[i].label,
                                        static_cast<Eigen::Index>(num_classes),
                                        cfg.smoothing));
    }
    const BatchGrad g = batch_ce_grad(model.model.head, model.embed_all(docs), targets,
                                      std::vector<double>(gi.size(), 1.0 / gi.size()));
    if (cfg.train_embeddings) {
      emb_grad = Eigen::MatrixXd::Zero(emb.input.rows(), d);
      scatter_input_grad(docs, g.dx, emb_grad);
    }
    model.step(g.head, cfg.train_embeddings ? &emb_grad : nullptr,
               cfg.lr_head * warm, cfg.lr_encoder * warm);

    HistoryRow row;
    row.step = it;
    row.loss_sup = g.loss;
    bool stop = false;
    if (is_eval_step(it, cfg)) {
      const double acc = evaluate(model.model, dev, num_classes).accuracy;
      row.dev_acc = acc;
      stop = selector.update(acc, model.model, cfg);
    }
    result.history.push_back(row);
    result.steps_run = it + 1;
    if (stop) break;
  }
  result.teacher = model.model;
  result.final_student = model.model;
  result.student = selector.best_model ? *selector.best_model : model.model;
  result.best_dev_acc = selector.best;
  return result;
}

TextClassifier finetune_student(const TextClassifier& student,
                                const std::vector<Document>& gold,
                                const TrainerConfig& cfg) {
  require(!gold.empty(), "fine-tuning needs a non-empty gold set");
  Embeddings emb{student.embeddings, student.embeddings};
  Party party(emb, student.head, cfg.adamw);
  const auto C = student.head.num_classes();
  Rng rng(derive_seed(cfg.seed, kTagFinetune));
  std::vector<std::size_t> order(gold.size());
  Eigen::MatrixXd emb_grad;
  for (std::size_t e = 0; e < cfg.finetune_epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.finetune_batch) {
      const std::size_t end = std::min(order.size(), b + cfg.finetune_batch);
      std::vector<const std::vector<WordId>*> docs;
      std::vector<Eigen::VectorXd> targets;
      for (std::size_t i = b; i < end; ++i) {
        docs.push_back(&gold[order[i]].tokens);
        targets.push_back(smoothed_target(*gold[order[i]].label, C, cfg.smoothing));
      }
      const BatchGrad g =
          batch_ce_grad(party.model.head, party.embed_all(docs), targets,
                        std::vector<double>(docs.size(), 1.0 / docs.size()));
      if (cfg.train_embeddings) {
        emb_grad = Eigen::MatrixXd::Zero(emb.input.rows(), emb.input.cols());
        scatter_input_grad(docs, g.dx, emb_grad);
      }
      party.step(g.head, cfg.train_embeddings ? &emb_grad : nullptr,
                 cfg.finetune_lr, cfg.finetune_lr);
    }
  }
  return party.model;
}

EvalResult evaluate(const Predictor& predict, const std::vector<Document>& docs,
                    std::size_t num_classes) {
  if (docs.empty()) fail(ErrorCode::kData, "cannot evaluate on an empty set");
  EvalResult r;
  r.support.assign(num_classes, 0);
  std::vector<std::size_t> hits(num_classes, 0);
  std::size_t correct = 0;
  for (const auto& doc : docs) {
    if (!doc.label) fail(ErrorCode::kData, "evaluation set must be labeled");
    const ClassId y = *doc.label;
    require(y < num_classes, "label out of range");
    ++r.support[y];
    if (predict(doc.tokens) == y) {
      ++correct;
      ++hits[y];
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(docs.size());
  for (std::size_t c = 0; c < num_classes; ++c)
    r.per_class.push_back(r.support[c] ? static_cast<double>(hits[c]) / r.support[c]
                                       : std::numeric_limits<double>::quiet_NaN());
  return r;
}

EvalResult evaluate(const TextClassifier& model, const std::vector<Document>& docs,
                    std::size_t num_classes) {
  return evaluate([&](std::span<const WordId> t) { return model.predict(t); }, docs,
                  num_classes);
}

}  // namespace cformer
