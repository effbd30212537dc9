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

#include "cformer/lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.hpp"

namespace cformer {

namespace {

constexpr int kLdaFormatVersion = 1;

std::size_t draw_categorical(const std::vector<double>& cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto k = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(k, cumulative.size() - 1);
}

}  // namespace

GibbsSampler::GibbsSampler(const TokenLists& docs, std::size_t vocab_size,
                           std::size_t num_topics, double alpha, double beta,
                           std::uint64_t seed)
    : docs_(docs),
      vocab_size_(vocab_size),
      num_topics_(num_topics),
      alpha_(alpha),
      beta_(beta),
      rng_(derive_seed(seed, 0x1da)),
      n_dk_(docs.size() * num_topics, 0),
      n_wk_(vocab_size * num_topics, 0),
      n_k_(num_topics, 0),
      weights_(num_topics, 0.0) {
  require(num_topics >= 2, "LDA needs at least 2 topics");
  require(alpha > 0.0 && beta > 0.0, "LDA priors must be positive");
  z_.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z_[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const WordId w = docs[d][i];
      require(w < vocab_size, "word id out of range");
      const auto k = static_cast<std::uint32_t>(uniform_index(rng_, num_topics));
      z_[d][i] = k;
      ++n_dk_[d * num_topics + k];
      ++n_wk_[static_cast<std::size_t>(w) * num_topics + k];
      ++n_k_[k];
    }
  }
}

void GibbsSampler::sweep() {
  const std::size_t K = num_topics_;
  const double v_beta = static_cast<double>(vocab_size_) * beta_;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::uint32_t* ndk = &n_dk_[d * K];
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const std::size_t w = docs_[d][i];
      std::uint32_t* nwk = &n_wk_[w * K];
      const std::uint32_t old = z_[d][i];
      --ndk[old];
      --nwk[old];
      --n_k_[old];
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        acc += (ndk[k] + alpha_) * (nwk[k] + beta_) /
               (static_cast<double>(n_k_[k]) + v_beta);
        weights_[k] = acc;
      }
      const auto k = static_cast<std::uint32_t>(draw_categorical(weights_, rng_));
      z_[d][i] = k;
      ++ndk[k];
      ++nwk[k];
      ++n_k_[k];
    }
  }
}

Eigen::MatrixXd GibbsSampler::phi_estimate() const {
  const std::size_t K = num_topics_;
  const double v_beta = static_cast<double>(vocab_size_) * beta_;
  Eigen::MatrixXd phi(K, vocab_size_);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = static_cast<double>(n_k_[k]) + v_beta;
    for (std::size_t w = 0; w < vocab_size_; ++w)
      phi(k, w) = (n_wk_[w * K + k] + beta_) / denom;
  }
  return phi;
}

Eigen::MatrixXd GibbsSampler::theta_estimate() const {
  const std::size_t K = num_topics_;
  const double k_alpha = static_cast<double>(K) * alpha_;
  Eigen::MatrixXd theta(docs_.size(), K);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const double denom = static_cast<double>(docs_[d].size()) + k_alpha;
    for (std::size_t k = 0; k < K; ++k)
      theta(d, k) = (n_dk_[d * K + k] + alpha_) / denom;
  }
  return theta;
}

LdaModel fit_lda(const TokenLists& docs, std::size_t vocab_size,
                 const LdaConfig& cfg) {
  if (docs.empty()) fail(ErrorCode::kData, "cannot fit LDA on an empty corpus");
  require(cfg.num_topics >= 2, "LDA needs K >= 2");
  require(cfg.sweeps > cfg.burn_in, "sweeps must exceed burn_in");
  require(cfg.sample_lag >= 1, "sample_lag must be >= 1");
  require(vocab_size >= 1, "empty vocabulary");
  if (cfg.num_topics > docs.size())
    warn("LDA: K=" + std::to_string(cfg.num_topics) + " exceeds the " +
         std::to_string(docs.size()) + " documents in the corpus");

  LdaModel model;
  model.num_topics = cfg.num_topics;
  model.alpha = cfg.effective_alpha();
  model.beta = cfg.beta;

  GibbsSampler sampler(docs, vocab_size, cfg.num_topics, model.alpha,
                       model.beta, cfg.seed);
  Eigen::MatrixXd phi_sum = Eigen::MatrixXd::Zero(cfg.num_topics, vocab_size);
  Eigen::MatrixXd theta_sum = Eigen::MatrixXd::Zero(docs.size(), cfg.num_topics);
  std::size_t samples = 0;
  for (std::size_t s = 1; s <= cfg.sweeps; ++s) {
    sampler.sweep();
    const bool sampled = s > cfg.burn_in &&
                         ((s - cfg.burn_in) % cfg.sample_lag == 0 ||
                          (s == cfg.sweeps && samples == 0));
    if (sampled) {
      phi_sum += sampler.phi_estimate();
      theta_sum += sampler.theta_estimate();
      ++samples;
    }
  }
  model.phi = phi_sum / static_cast<double>(samples);
  model.theta = theta_sum / static_cast<double>(samples);
  // Renormalize away accumulated rounding so rows sum to 1 to machine precision.
  for (Eigen::Index k = 0; k < model.phi.rows(); ++k)
    model.phi.row(k) /= model.phi.row(k).sum();
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d)
    model.theta.row(d) /= model.theta.row(d).sum();

  model.marginal_word_prob = Eigen::VectorXd::Zero(vocab_size);
  double total = 0.0;
  for (const auto& doc : docs) {
    for (WordId w : doc) model.marginal_word_prob[w] += 1.0;
    total += static_cast<double>(doc.size());
  }
  if (total > 0.0) model.marginal_word_prob /= total;
  return model;
}

std::vector<WordId> topic_top_words(const LdaModel& model, std::size_t topic,
                                    std::size_t n) {
  require(topic < model.num_topics, "topic id out of range");
  const std::size_t V = model.vocab_size();
  require(n <= V, "n exceeds vocabulary size");
  std::vector<WordId> ids(V);
  std::iota(ids.begin(), ids.end(), WordId{0});
  const auto row = model.phi.row(static_cast<Eigen::Index>(topic));
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                    ids.end(), [&](WordId a, WordId b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

double heldout_log_likelihood(const LdaModel& model, const TokenLists& docs,
                              std::size_t fold_in_sweeps, std::uint64_t seed) {
  const std::size_t K = model.num_topics;
  Rng rng(derive_seed(seed, 0x401d));
  std::vector<double> cumulative(K);
  double log_lik = 0.0;
  std::size_t scored = 0;
  for (const auto& doc : docs) {
    if (doc.size() < 2) continue;
    const std::size_t half = doc.size() / 2;
    std::vector<std::uint32_t> z(half);
    std::vector<double> n_k(K, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
      z[i] = static_cast<std::uint32_t>(uniform_index(rng, K));
      n_k[z[i]] += 1.0;
    }
    for (std::size_t s = 0; s < fold_in_sweeps; ++s) {
      for (std::size_t i = 0; i < half; ++i) {
        n_k[z[i]] -= 1.0;
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          acc += (n_k[k] + model.alpha) *
                 model.phi(static_cast<Eigen::Index>(k), doc[i]);
          cumulative[k] = acc;
        }
        z[i] = static_cast<std::uint32_t>(draw_categorical(cumulative, rng));
        n_k[z[i]] += 1.0;
      }
    }
    const double denom = static_cast<double>(half) + K * model.alpha;
    for (std::size_t i = half; i < doc.size(); ++i) {
      double p = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        p += (n_k[k] + model.alpha) / denom *
             model.phi(static_cast<Eigen::Index>(k), doc[i]);
      log_lik += std::log(p);
      ++scored;
    }
  }
  require(scored > 0, "no scorable held-out tokens");
  return log_lik / static_cast<double>(scored);
}

std::string lda_to_json(const LdaModel& model) {
  nlohmann::json j;
  j["format"] = "cformer-lda";
  j["version"] = kLdaFormatVersion;
  j["num_topics"] = model.num_topics;
  j["vocab_size"] = model.vocab_size();
  j["num_docs"] = model.theta.rows();
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["vocab_hash"] = hex64(model.vocab_hash);
  j["phi"] = detail::matrix_to_json(model.phi);
  j["theta"] = detail::matrix_to_json(model.theta);
  j["marginal_word_prob"] = detail::vector_to_json(model.marginal_word_prob);
  return j.dump() + "\n";
}

LdaModel lda_from_json(const std::string& text,
                       std::uint64_t expected_vocab_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format") != "cformer-lda")
      fail(ErrorCode::kParse, "not an LDA model file");
    if (j.at("version").get<int>() != kLdaFormatVersion)
      fail(ErrorCode::kParse, "unsupported LDA model version");
    if (j.at("vocab_hash").get<std::string>() != hex64(expected_vocab_hash))
      fail(ErrorCode::kConfigMismatch,
           "LDA model vocabulary hash does not match the corpus");
    LdaModel m;
    m.num_topics = j.at("num_topics").get<std::size_t>();
    const auto V = j.at("vocab_size").get<Eigen::Index>();
    const auto D = j.at("num_docs").get<Eigen::Index>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.vocab_hash = expected_vocab_hash;
    m.phi = detail::matrix_from_json(j.at("phi"), static_cast<Eigen::Index>(m.num_topics),
                             V, "phi");
    m.theta = detail::matrix_from_json(j.at("theta"), D,
                               static_cast<Eigen::Index>(m.num_topics), "theta");
    m.marginal_word_prob =
        detail::vector_from_json(j.at("marginal_word_prob"), V, "marginal_word_prob");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed LDA model file: ") + e.what());
  }
}

}  // namespace cformer
