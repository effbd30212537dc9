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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "oracles.hpp"

#include "cformer/coherence.hpp"
#include "cformer/encoder.hpp"
#include "cformer/lda.hpp"
#include "cformer/masking.hpp"
#include "cformer/mpl.hpp"
#include "cformer/pipeline.hpp"
#include "cformer/synthetic.hpp"
#include "cformer/wordlist.hpp"

namespace fs = std::filesystem;
using namespace cformer;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Eigen::VectorXd random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * (2 * uniform01(rng) - 1);
  return v;
}

// --- individual criteria -------------------------------------------------

Outcome sharpening() {
  const auto t0 = Clock::now();
  Eigen::VectorXd l(3);
  l << 0.2, 0.5, 0.3;
  bool ok = sharpen(l, 1.0) == l;
  Eigen::VectorXd two(2);
  two << 0.8, 0.2;
  const Eigen::VectorXd s = sharpen(two, 0.5);
  const double e0 = std::abs(s[0] - 0.64 / 0.68), e1 = std::abs(s[1] - 0.04 / 0.68);
  ok &= e0 < 1e-9 && e1 < 1e-9;
  ok &= std::abs(s[0] - 0.9412) < 5e-5 && std::abs(s[1] - 0.0588) < 5e-5;
  Rng rng(20);
  int kept = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd p = random_vec(rng, 2 + static_cast<Eigen::Index>(uniform_index(rng, 8)))
                            .array()
                            .abs() +
                        1e-6;
    p /= p.sum();
    const double t = 0.01 + 5.0 * uniform01(rng);
    kept += hard_label(sharpen(p, t)) == hard_label(p);
  }
  ok &= kept == 1000;
  const double secs = seconds_since(t0);
  ok &= secs < 1.0;
  return {ok, "max err " + fmt("%.1e", std::max(e0, e1)) + ", argmax kept " +
                  std::to_string(kept) + "/1000, " + fmt("%.3f s", secs)};
}

Outcome coherence_oracle() {
  const auto t0 = Clock::now();
  Rng rng(31);
  double worst = 0.0;
  int corpora = 0;
  while (corpora < 50) {
    const std::size_t n_docs = 1 + uniform_index(rng, 8);
    const std::size_t n_words = 2 + uniform_index(rng, 11);
    TokenLists docs(n_docs);
    for (auto& d : docs)
      for (std::size_t k = 0, len = 1 + uniform_index(rng, 10); k < len; ++k)
        d.push_back(static_cast<WordId>(uniform_index(rng, n_words)));
    Vocabulary vocab;
    for (std::size_t w = 0; w < n_words; ++w) vocab.intern("w" + std::to_string(w));
    std::vector<WordId> present;
    for (WordId w = 0; w < n_words; ++w)
      for (const auto& d : docs)
        if (oracle::contains(d, w)) {
          present.push_back(w);
          break;
        }
    if (present.size() < 2) continue;
    ++corpora;
    std::shuffle(present.begin(), present.end(), rng);
    const std::size_t N = std::min<std::size_t>(present.size(), 2 + uniform_index(rng, 4));
    const std::vector<WordId> words(present.begin(), present.begin() + N);
    CoherenceConfig cfg;
    cfg.window = 3;
    worst = std::max(worst, std::abs(c_umass(words, docs, vocab, cfg) -
                                     oracle::umass(docs, words, cfg.epsilon)));
    worst = std::max(worst, std::abs(c_v(words, docs, vocab, cfg) -
                                     oracle::cv(docs, words, 3, cfg.epsilon)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 10.0,
          "50 corpora, max |diff| " + fmt("%.1e", worst) + ", " + fmt("%.2f s", secs)};
}

struct PlantedFit {
  PlantedTopics planted;
  LdaModel model;
};

Outcome lda_recovery(PlantedFit& fit) {
  const auto t0 = Clock::now();
  fit.planted = planted_topic_corpus(3, 10, 300, 20, 4);
  const TokenLists docs = token_lists(fit.planted.corpus.docs);
  LdaConfig cfg;
  cfg.num_topics = 3;
  cfg.sweeps = 500;
  cfg.seed = 1;
  fit.model = fit_lda(docs, fit.planted.corpus.vocab.size(), cfg);
  const LdaModel again = fit_lda(docs, fit.planted.corpus.vocab.size(), cfg);
  std::vector<std::vector<WordId>> top;
  for (std::size_t k = 0; k < 3; ++k) top.push_back(topic_top_words(fit.model, k, 5));
  const double precision = oracle::planted_precision(top, fit.planted.topics);
  const bool same = again.phi == fit.model.phi && again.theta == fit.model.theta;
  const double secs = seconds_since(t0);
  return {precision >= 0.8 && same && secs < 60.0,
          "top-5 precision " + fmt("%.3f", precision) + (same ? ", deterministic" : ", NOT deterministic") +
              ", " + fmt("%.2f s", secs) + " for two fits"};
}

// Full-vocabulary rankings under lambda = 1 and lambda = 0 against direct
// sorts by phi and by lift.
bool relevance_reduces(const LdaModel& m, std::string& why) {
  const auto V = static_cast<std::size_t>(m.phi.cols());
  const TopicWordList by_phi = build_relevance_list(m, 1.0, V);
  const TopicWordList by_lift = build_relevance_list(m, 0.0, V);
  for (std::size_t k = 0; k < m.num_topics; ++k) {
    std::vector<WordId> ids(V);
    std::iota(ids.begin(), ids.end(), 0u);
    const auto row = static_cast<Eigen::Index>(k);
    std::vector<WordId> phi_order = ids, lift_order = ids;
    std::stable_sort(phi_order.begin(), phi_order.end(),
                     [&](WordId a, WordId b) { return m.phi(row, a) > m.phi(row, b); });
    std::stable_sort(lift_order.begin(), lift_order.end(), [&](WordId a, WordId b) {
      return m.phi(row, a) / m.marginal_word_prob[a] > m.phi(row, b) / m.marginal_word_prob[b];
    });
    if (by_phi.per_topic[k] != phi_order) {
      why = "phi ranking differs in topic " + std::to_string(k);
      return false;
    }
    if (by_lift.per_topic[k] != lift_order) {
      why = "lift ranking differs in topic " + std::to_string(k);
      return false;
    }
  }
  return true;
}

Outcome relevance_reductions(const std::vector<std::pair<std::string, const LdaModel*>>& models) {
  std::string detail;
  bool ok = !models.empty();
  for (const auto& [name, m] : models) {
    std::string why;
    const bool r = relevance_reduces(*m, why);
    ok &= r;
    detail += (detail.empty() ? "" : ", ") + name + " K=" + std::to_string(m->num_topics) +
              (r ? " exact" : " " + why);
  }
  return {ok, detail};
}

Outcome masking_invariants() {
  Rng rng(60);
  int count_ok = 0, priority_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 80);
    const std::size_t V = 5 + uniform_index(rng, 50);
    std::vector<WordId> doc(n);
    for (auto& w : doc) w = static_cast<WordId>(uniform_index(rng, V));
    TopicWordList list;
    for (WordId w = 0; w < V; ++w)
      if (uniform01(rng) < 0.25) list.words.push_back(w);
    const MaskingPolicy policy = MaskingPolicy::objective(list, 0.15);
    const MaskedExample ex = mask_document(doc, policy, static_cast<WordId>(V), rng());
    const auto expected = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n) + 0.5 + 1e-9)));
    count_ok += ex.positions.size() == expected;
    std::vector<char> masked(n, 0);
    for (std::size_t p : ex.positions) masked[p] = 1;
    bool unmasked_topic = false, masked_other = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool topic = policy.is_topic_word(doc[i]);
      if (masked[i]) masked_other |= !topic;
      else unmasked_topic |= topic;
    }
    priority_ok += !(unmasked_topic && masked_other);
  }
  return {count_ok == 1000 && priority_ok == 1000,
          "count " + std::to_string(count_ok) + "/1000, priority " +
              std::to_string(priority_ok) + "/1000"};
}

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  Rng rng(70);
  double worst_enc = 0.0, worst_cls = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index V = 4 + static_cast<Eigen::Index>(uniform_index(rng, 5)), d = 3;
    Embeddings e = Embeddings::random(V, d, 0.5, rng);
    std::vector<WordId> doc(6 + uniform_index(rng, 10));
    for (auto& w : doc) w = static_cast<WordId>(uniform_index(rng, static_cast<std::size_t>(V)));
    const MaskedExample ex =
        mask_document(doc, MaskingPolicy::random(0.3), static_cast<WordId>(V), rng());
    Embeddings g{Eigen::MatrixXd::Zero(V, d), Eigen::MatrixXd::Zero(V, d)};
    mlm_loss(e, ex, 2, &g);
    Eigen::VectorXd flat(2 * V * d), analytic(2 * V * d);
    flat << Eigen::Map<Eigen::VectorXd>(e.input.data(), V * d),
        Eigen::Map<Eigen::VectorXd>(e.output.data(), V * d);
    analytic << Eigen::Map<Eigen::VectorXd>(g.input.data(), V * d),
        Eigen::Map<Eigen::VectorXd>(g.output.data(), V * d);
    const Eigen::VectorXd fd = oracle::numeric_grad(
        [&](const Eigen::VectorXd& x) {
          Embeddings probe{Eigen::Map<const Eigen::MatrixXd>(x.data(), V, d),
                           Eigen::Map<const Eigen::MatrixXd>(x.data() + V * d, V, d)};
          return mlm_loss(probe, ex, 2, nullptr).sum;
        },
        flat);
    worst_enc = std::max(worst_enc, oracle::relative_error(analytic, fd));
  }
  for (int trial = 0; trial < 100; ++trial) {
    MlpParams p = MlpParams::zeros(5, 4, 3);
    p.assign(random_vec(rng, p.num_params()));
    const Eigen::VectorXd x = random_vec(rng, 5, 2.0);
    Eigen::VectorXd q = random_vec(rng, 3).array().abs() + 0.05;
    q /= q.sum();
    const MlpGrads g = backward(p, x, q);
    Eigen::VectorXd analytic(p.num_params() + 5);
    analytic << g.params.flatten(), g.input;
    Eigen::VectorXd point(p.num_params() + 5);
    point << p.flatten(), x;
    const Eigen::VectorXd fd = oracle::numeric_grad(
        [&](const Eigen::VectorXd& z) {
          MlpParams probe = p;
          probe.assign(z.head(p.num_params()));
          return cross_entropy(forward(probe, z.tail(5)), q);
        },
        point);
    worst_cls = std::max(worst_cls, oracle::relative_error(analytic, fd));
  }
  const double secs = seconds_since(t0);
  return {worst_enc < 1e-4 && worst_cls < 1e-4 && secs < 30.0,
          "max rel err encoder " + fmt("%.1e", worst_enc) + ", classifier " +
              fmt("%.1e", worst_cls) + ", " + fmt("%.2f s", secs)};
}

Outcome meta_alignment() {
  const auto t0 = Clock::now();
  Rng rng(80);
  int positive = 0;
  double min_cos = 1.0;
  for (int i = 0; i < 20; ++i) {
    const oracle::MetaInstance in = oracle::random_meta_instance(rng);
    const double c =
        oracle::cosine(oracle::meta_gradient_fd(in), oracle::first_order_expectation(in));
    positive += c > 0;
    min_cos = std::min(min_cos, c);
  }
  const double secs = seconds_since(t0);
  return {positive >= 18 && secs < 60.0,
          std::to_string(positive) + "/20 positive, min cosine " + fmt("%.3f", min_cos) +
              ", " + fmt("%.2f s", secs)};
}

Outcome lambda_schedule() {
  const double a = lambda_u_at(0, 6000), b = lambda_u_at(3000, 6000),
               c = lambda_u_at(6000, 6000), d = lambda_u_at(10000, 6000);
  return {a == 0.0 && b == 0.5 && c == 1.0 && d == 1.0,
          fmt("%g", a) + ", " + fmt("%g", b) + ", " + fmt("%g", c) + ", " + fmt("%g", d)};
}

// --- pipeline-level criteria ----------------------------------------------

struct Benchmark {
  fs::path dir;
  json compare;
  double seconds = 0.0;
  std::string table;
};

const json& row_of(const json& compare, const std::string& variant) {
  for (const auto& r : compare.at("table"))
    if (r.at("variant") == variant) return r;
  throw std::runtime_error("variant missing from comparison: " + variant);
}

Outcome semi_supervised_gain(const Benchmark& b) {
  const double mpl = row_of(b.compare, "objective").at("mean_accuracy");
  const double gold = row_of(b.compare, "gold-only").at("mean_accuracy");
  return {mpl >= gold && b.seconds < 600.0,
          "MPL student " + fmt("%.2f%%", 100 * mpl) + " vs gold-only " +
              fmt("%.2f%%", 100 * gold) + ", " + fmt("%.1f s", b.seconds) +
              " for all compared variants"};
}

Outcome masking_effect(const Benchmark& b) {
  const double obj = row_of(b.compare, "objective").at("mean_accuracy");
  const double rnd = row_of(b.compare, "random").at("mean_accuracy");
  std::string deltas;
  for (const auto& d : b.compare.at("objective_minus_random"))
    deltas += (deltas.empty() ? "" : " ") + fmt("%+.2f", 100 * d.get<double>());
  return {obj >= rnd - 0.005 && b.seconds < 900.0,
          "objective " + fmt("%.2f%%", 100 * obj) + " vs random " + fmt("%.2f%%", 100 * rnd) +
              ", per-seed deltas (pp) [" + deltas + "], " + fmt("%.1f s", b.seconds)};
}

Outcome determinism(const fs::path& first, const fs::path& second) {
  std::size_t compared = 0;
  std::string differing;
  for (const auto& entry : fs::recursive_directory_iterator(second)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), second);
    if (rel == "manifest.json") continue;
    ++compared;
    if (!fs::exists(first / rel) || slurp(first / rel) != slurp(entry.path()))
      differing += " " + rel.string();
  }
  return {compared > 0 && differing.empty(),
          std::to_string(compared) + " artifacts compared" +
              (differing.empty() ? ", all identical" : ", differing:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string config = "configs/synthetic.json";
  std::string out = "out/acceptance";
  app.add_option("--config", config, "benchmark experiment config");
  app.add_option("--out", out, "scratch directory for pipeline runs");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  const auto line = [&](int id, const std::string& title, const Outcome& o) {
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  const auto guarded = [&](int id, const std::string& title, const std::function<Outcome()>& f) {
    try {
      line(id, title, f());
    } catch (const std::exception& e) {
      line(id, title, {false, std::string("exception: ") + e.what()});
    }
  };

  std::printf("[SKIP]  1 paper-scale results: not reproducible without BERT-scale encoders "
              "and the full datasets; substituted by criteria 2-10\n");
  guarded(2, "sharpening", sharpening);
  guarded(3, "coherence vs exhaustive oracle", coherence_oracle);
  PlantedFit planted;
  guarded(4, "LDA planted-topic recovery", [&] { return lda_recovery(planted); });

  Benchmark bench;
  bench.dir = fs::path(out) / "benchmark";
  std::string bench_error;
  try {
    fs::remove_all(out);
    ExperimentConfig cfg;
    cfg.merge_file(config);
    cfg.set("output.dir", bench.dir.string());
    const auto t0 = Clock::now();
    Pipeline p(cfg);
    p.run("all");
    p.run("compare");
    bench.seconds = seconds_since(t0);
    bench.compare = json::parse(slurp(bench.dir / "compare.json"));
    bench.table = slurp(bench.dir / "compare.md");
  } catch (const std::exception& e) {
    bench_error = e.what();
  }

  guarded(5, "relevance reductions", [&] {
    std::vector<std::pair<std::string, const LdaModel*>> models;
    if (planted.model.num_topics) models.emplace_back("planted", &planted.model);
    static LdaModel bench_model;
    if (bench_error.empty()) {
      const PreparedData data = prepared_from_json(slurp(bench.dir / "corpus.json"));
      bench_model = lda_from_json(slurp(bench.dir / "lda.json"), data.corpus.vocab.hash());
      models.emplace_back("benchmark", &bench_model);
    }
    return relevance_reductions(models);
  });
  guarded(6, "masking count and priority", masking_invariants);
  guarded(7, "gradient checks", gradient_checks);
  guarded(8, "MPL meta-gradient alignment", meta_alignment);
  guarded(9, "semi-supervised gain", [&]() -> Outcome {
    if (!bench_error.empty()) return {false, "benchmark failed: " + bench_error};
    return semi_supervised_gain(bench);
  });
  guarded(10, "masking-policy effect", [&]() -> Outcome {
    if (!bench_error.empty()) return {false, "benchmark failed: " + bench_error};
    return masking_effect(bench);
  });
  guarded(11, "lambda_u schedule", lambda_schedule);
  guarded(12, "determinism", [&]() -> Outcome {
    if (!bench_error.empty()) return {false, "benchmark failed: " + bench_error};
    // Same config, same output directory: snapshot the first run, rerun from
    // an empty directory and compare.
    const fs::path snapshot = fs::path(out) / "first-run";
    fs::copy(bench.dir, snapshot, fs::copy_options::recursive);
    fs::remove_all(bench.dir);
    ExperimentConfig cfg;
    cfg.merge_file(config);
    cfg.set("output.dir", bench.dir.string());
    Pipeline(cfg).run("all");
    return determinism(snapshot, bench.dir);
  });

  if (!bench.table.empty()) std::printf("\ncomparison table (test accuracy %%):\n%s", bench.table.c_str());
  std::printf("\n%d criterion check(s) failed\n", failed);
  return failed ? 1 : 0;
}
