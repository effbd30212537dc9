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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cformer/classifier.hpp"
#include "cformer/corpus.hpp"
#include "cformer/encoder.hpp"

namespace cformer {

struct TrainerConfig {
  double temperature = 0.5;
  double conf_threshold = 0.9;
  std::size_t lambda_u_ramp_steps = 6000;
  std::size_t max_steps = 7000;
  std::size_t warmup_steps = 50;
  std::size_t eval_every = 500;
  double early_stop_delta = 0.005;
  std::size_t early_stop_patience = 4;
  std::size_t batch_gold = 8;
  // Zero disables the unlabeled branch (supervised teacher only).
  std::size_t batch_unlabeled = 16;
  double lr_encoder = 1e-3;
  double lr_head = 1e-3;
  double smoothing = 0.15;
  double finetune_lr = 1e-3;
  std::size_t finetune_epochs = 10;
  std::size_t finetune_batch = 32;
  double augment_prob = 0.9;
  std::size_t augment_k = 5;
  std::size_t hidden = 32;
  bool use_mpl = true;
  // Update the embedding tables of teacher and student during training.
  bool train_embeddings = false;
  AdamWConfig adamw;
  std::uint64_t seed = 0;

  void validate() const;
};

double lambda_u_at(std::size_t step, std::size_t ramp_steps);

// l^(1/t) renormalized to the simplex.
Eigen::VectorXd sharpen(const Eigen::VectorXd& l, double t);

// Index of the maximum, smallest index on ties.
ClassId hard_label(const Eigen::VectorXd& l);

// A classifier: mean-pooled embedding table followed by the MLP head.
struct TextClassifier {
  Eigen::MatrixXd embeddings;  // V x d
  MlpParams head;

  Eigen::VectorXd embed(std::span<const WordId> tokens) const;
  Eigen::VectorXd predict_proba(std::span<const WordId> tokens) const;
  ClassId predict(std::span<const WordId> tokens) const;
};

// For every word, its k nearest other words by cosine over embedding rows,
// closest first, ties by ascending id.
using NeighborTable = std::vector<std::vector<WordId>>;
NeighborTable nearest_neighbors(const Eigen::MatrixXd& embeddings, std::size_t k);

// Each token is replaced, with probability `prob`, by a uniform draw from its
// neighbor list.
std::vector<WordId> augment(std::span<const WordId> tokens,
                            const NeighborTable& neighbors, double prob,
                            std::uint64_t seed);
std::vector<WordId> augment(std::span<const WordId> tokens, const Embeddings& emb,
                            double prob, std::size_t k, std::uint64_t seed);

// Weighted cross-entropy over a batch of input vectors:
// loss = sum_i w_i * CE(targets_i, head(xs_i)). `dx` holds per-item input
// gradients, already multiplied by w_i.
struct BatchGrad {
  double loss = 0.0;
  MlpParams head;
  std::vector<Eigen::VectorXd> dx;
};
BatchGrad batch_ce_grad(const MlpParams& head,
                        const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<Eigen::VectorXd>& targets,
                        const std::vector<double>& weights);

struct TeacherLosses {
  double loss_sup = 0.0;
  double loss_cons = 0.0;
  double kept_frac = 0.0;
  BatchGrad sup;
  BatchGrad cons;
  std::vector<Eigen::VectorXd> unlabeled_probs;  // T(x_u), no gradient
  std::vector<ClassId> pseudo_labels;            // hard(T(x_u))
};

// Supervised smoothed CE on the gold batch, plus the consistency loss between
// sharpened T(x_u) (held constant) and T(x_a), masked to confident items and
// averaged over the full unlabeled batch.
TeacherLosses teacher_losses(const MlpParams& teacher,
                             const std::vector<Eigen::VectorXd>& gold_x,
                             const std::vector<ClassId>& gold_y,
                             const std::vector<Eigen::VectorXd>& unlabeled_x,
                             const std::vector<Eigen::VectorXd>& augmented_x,
                             const TrainerConfig& cfg);

// Gradient of the student's smoothed CE on the pseudo-labeled batch.
BatchGrad student_pseudo_grad(const MlpParams& student,
                              const std::vector<Eigen::VectorXd>& augmented_x,
                              const std::vector<ClassId>& pseudo_labels,
                              double smoothing);

// Gradient of the plain (unsmoothed) mean CE on the gold batch.
BatchGrad gold_grad(const MlpParams& model,
                    const std::vector<Eigen::VectorXd>& gold_x,
                    const std::vector<ClassId>& gold_y);

struct StudentStep {
  double loss = 0.0;
  BatchGrad pseudo;  // gradient at the pre-update student
};

// One AdamW step of the student head on the pseudo-labeled batch.
StudentStep student_step(MlpParams& student, AdamWState& opt,
                         const std::vector<Eigen::VectorXd>& augmented_x,
                         const std::vector<ClassId>& pseudo_labels,
                         double smoothing, double lr);

// First-order meta pseudo label feedback. `h` is the learning-rate weighted
// dot product between the student's post-update gold gradient and its
// pre-update pseudo-label gradient; the teacher gradient is
// h * grad_T mean_i CE(onehot(pseudo_i), T(x_u_i)).
struct MplGrad {
  double h = 0.0;
  double gold_loss_after = 0.0;
  BatchGrad teacher;  // already scaled by h
};
MplGrad mpl_teacher_grad(const MlpParams& teacher,
                         const MlpParams& student_after,
                         const BatchGrad& pseudo_grad_before,
                         const std::vector<Eigen::VectorXd>& gold_x,
                         const std::vector<ClassId>& gold_y,
                         const std::vector<Eigen::VectorXd>& unlabeled_x,
                         const std::vector<ClassId>& pseudo_labels,
                         double student_lr);

// The teacher-side half: h * grad_T mean_i CE(onehot(pseudo_i), T(x_u_i)).
BatchGrad mpl_teacher_grad_for_h(const MlpParams& teacher, double h,
                                 const std::vector<Eigen::VectorXd>& unlabeled_x,
                                 const std::vector<ClassId>& pseudo_labels);

double dot(const MlpParams& a, const MlpParams& b);

struct HistoryRow {
  std::size_t step = 0;
  double loss_sup = 0.0;
  double loss_cons = 0.0;
  double loss_mpl = 0.0;  // student's gold CE after its update
  double lambda_u = 0.0;
  double kept_frac = 0.0;
  std::optional<double> dev_acc;
};

std::string history_to_csv(const std::vector<HistoryRow>& rows);

struct TrainResult {
  TextClassifier teacher;       // final
  TextClassifier student;       // best dev checkpoint
  TextClassifier final_student;
  std::vector<HistoryRow> history;
  double best_dev_acc = 0.0;
  std::size_t steps_run = 0;
};

// The teacher/student loop. When the unlabeled branch is disabled, the
// teacher is the selected model and `student` holds its best checkpoint.
TrainResult train(const SplitSet& splits, const Embeddings& emb,
                  std::size_t num_classes, const TrainerConfig& cfg);

// Gold-only supervised training with the same batch schedule, warmup and dev
// selection as `train`.
TrainResult train_supervised(const std::vector<Document>& gold,
                             const std::vector<Document>& dev,
                             const Embeddings& emb, std::size_t num_classes,
                             const TrainerConfig& cfg);

TextClassifier finetune_student(const TextClassifier& student,
                                const std::vector<Document>& gold,
                                const TrainerConfig& cfg);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class;  // NaN for classes absent from the set
  std::vector<std::size_t> support;
};

using Predictor = std::function<ClassId(std::span<const WordId>)>;
EvalResult evaluate(const Predictor& predict, const std::vector<Document>& docs,
                    std::size_t num_classes);
EvalResult evaluate(const TextClassifier& model, const std::vector<Document>& docs,
                    std::size_t num_classes);

// Cycles through a shuffled index range, reshuffling each pass.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed);
  std::vector<std::size_t> next(std::size_t batch);

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Rng rng_;
};

}  // namespace cformer
