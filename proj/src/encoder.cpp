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

#include "cformer/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.hpp"

namespace cformer {

namespace {
constexpr int kEmbeddingFormatVersion = 1;
}

Embeddings Embeddings::random(Eigen::Index vocab_size, Eigen::Index dim,
                              double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Embeddings e{Eigen::MatrixXd(vocab_size, dim), Eigen::MatrixXd(vocab_size, dim)};
  for (Eigen::Index r = 0; r < vocab_size; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) e.input(r, c) = normal(rng);
  for (Eigen::Index r = 0; r < vocab_size; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) e.output(r, c) = normal(rng);
  return e;
}

MlmLoss mlm_loss(const Embeddings& emb, const MaskedExample& example,
                 std::size_t context, Embeddings* grad) {
  const auto V = emb.vocab_size();
  const std::size_t n = example.tokens.size();
  std::vector<char> masked(n, 0);
  for (std::size_t p : example.positions) masked[p] = 1;

  MlmLoss out;
  std::vector<WordId> ctx;
  for (std::size_t k = 0; k < example.positions.size(); ++k) {
    const std::size_t p = example.positions[k];
    ctx.clear();
    const std::size_t lo = p >= context ? p - context : 0;
    const std::size_t hi = std::min(n - 1, p + context);
    for (std::size_t i = lo; i <= hi; ++i)
      if (!masked[i]) ctx.push_back(example.tokens[i]);
    if (ctx.empty()) continue;

    Eigen::VectorXd h = Eigen::VectorXd::Zero(emb.dim());
    for (WordId w : ctx) h += emb.input.row(w).transpose();
    h /= static_cast<double>(ctx.size());
    const Eigen::VectorXd probs = softmax(emb.output * h);
    const WordId target = example.targets[k];
    require(static_cast<Eigen::Index>(target) < V, "target id out of range");
    out.sum -= std::log(probs[target]);
    ++out.count;

    if (grad) {
      Eigen::VectorXd dlogits = probs;
      dlogits[target] -= 1.0;
      grad->output.noalias() += dlogits * h.transpose();
      const Eigen::VectorXd dh =
          emb.output.transpose() * dlogits / static_cast<double>(ctx.size());
      for (WordId w : ctx) grad->input.row(w) += dh.transpose();
    }
  }
  return out;
}

Embeddings pretrain_mlm(const std::vector<Document>& docs, std::size_t vocab_size,
                        const MaskingPolicy& policy, const EncoderConfig& cfg,
                        std::vector<double>* epoch_losses) {
  if (vocab_size < 2)
    fail(ErrorCode::kInvalidArgument, "masked-word pre-training needs |V| >= 2");
  require(cfg.dim >= 2, "embedding dimension must be >= 2");
  require(cfg.context >= 1, "context radius must be >= 1");
  require(cfg.batch_docs >= 1, "batch_docs must be >= 1");

  const auto V = static_cast<Eigen::Index>(vocab_size);
  Rng rng(derive_seed(cfg.seed, 0xe4c0));
  Embeddings emb = Embeddings::random(V, cfg.dim, cfg.init_std, rng);
  Embeddings m{Eigen::MatrixXd::Zero(V, cfg.dim), Eigen::MatrixXd::Zero(V, cfg.dim)};
  Embeddings v = m;
  Embeddings grad = m;
  std::int64_t step = 0;

  std::vector<Document> nonempty;
  for (const auto& d : docs)
    if (!d.tokens.empty()) nonempty.push_back(d);
  require(!nonempty.empty(), "no documents to pre-train on");

  std::vector<std::size_t> order(nonempty.size());
  const auto mask_id = static_cast<WordId>(vocab_size);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto examples = mask_corpus(nonempty, policy, mask_id, 1,
                                      derive_seed(cfg.seed, 0x3a5c, e));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_docs) {
      grad.input.setZero();
      grad.output.setZero();
      MlmLoss batch;
      const std::size_t end = std::min(order.size(), b + cfg.batch_docs);
      for (std::size_t i = b; i < end; ++i) {
        const auto l = mlm_loss(emb, examples[order[i]], cfg.context, &grad);
        batch.sum += l.sum;
        batch.count += l.count;
      }
      if (batch.count == 0) continue;
      const double scale = 1.0 / static_cast<double>(batch.count);
      grad.input *= scale;
      grad.output *= scale;
      ++step;
      adamw_update(emb.input, grad.input, m.input, v.input, step, cfg.adamw, cfg.lr);
      adamw_update(emb.output, grad.output, m.output, v.output, step, cfg.adamw, cfg.lr);
      epoch_sum += batch.sum;
      epoch_count += batch.count;
    }
    if (epoch_losses)
      epoch_losses->push_back(epoch_count ? epoch_sum / epoch_count : 0.0);
  }
  return emb;
}

Eigen::VectorXd embed_document(std::span<const WordId> tokens,
                               const Eigen::MatrixXd& input_table) {
  require(!tokens.empty(), "cannot embed an empty document");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(input_table.cols());
  for (WordId w : tokens) {
    require(static_cast<Eigen::Index>(w) < input_table.rows(), "word id out of range");
    x += input_table.row(w).transpose();
  }
  return x / static_cast<double>(tokens.size());
}

std::string embeddings_to_json(const Embeddings& emb, std::uint64_t vocab_hash) {
  nlohmann::json j;
  j["format"] = "cformer-embeddings";
  j["version"] = kEmbeddingFormatVersion;
  j["vocab_size"] = emb.vocab_size();
  j["dim"] = emb.dim();
  j["vocab_hash"] = hex64(vocab_hash);
  j["input"] = detail::matrix_to_json(emb.input);
  j["output"] = detail::matrix_to_json(emb.output);
  return j.dump() + "\n";
}

Embeddings embeddings_from_json(const std::string& text,
                                std::uint64_t expected_vocab_hash) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "cformer-embeddings")
      fail(ErrorCode::kParse, "not an embedding file");
    if (j.at("version").get<int>() != kEmbeddingFormatVersion)
      fail(ErrorCode::kParse, "unsupported embedding file version");
    if (j.at("vocab_hash").get<std::string>() != hex64(expected_vocab_hash))
      fail(ErrorCode::kConfigMismatch,
           "embedding vocabulary hash does not match the corpus");
    const auto V = j.at("vocab_size").get<Eigen::Index>();
    const auto d = j.at("dim").get<Eigen::Index>();
    return {detail::matrix_from_json(j.at("input"), V, d, "input"),
            detail::matrix_from_json(j.at("output"), V, d, "output")};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed embedding file: ") + e.what());
  }
}

}  // namespace cformer
