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

#include "cformer/cformer.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "cformer/mpl.hpp"
#include "cformer/pipeline.hpp"
#include "cformer/synthetic.hpp"

struct cformer_experiment {
  cformer::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

cformer_status to_status(cformer::ErrorCode code) {
  return static_cast<cformer_status>(static_cast<int>(code));
}

template <typename F>
cformer_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return CFORMER_OK;
  } catch (const cformer::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CFORMER_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CFORMER_E_INTERNAL;
  }
}

cformer_status null_arg(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return CFORMER_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* cformer_version(void) { return "0.1.0"; }

const char* cformer_status_name(cformer_status status) {
  switch (status) {
    case CFORMER_OK: return "ok";
    case CFORMER_E_INVALID_ARGUMENT: return "invalid_argument";
    case CFORMER_E_IO: return "io";
    case CFORMER_E_PARSE: return "parse";
    case CFORMER_E_MISSING_PREREQUISITE: return "missing_prerequisite";
    case CFORMER_E_CONFIG_MISMATCH: return "config_mismatch";
    case CFORMER_E_DATA: return "data";
    case CFORMER_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cformer_last_error(void) { return g_last_error.c_str(); }

cformer_status cformer_experiment_create(const char* config_path,
                                         cformer_experiment** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto exp = std::make_unique<cformer_experiment>();
    if (config_path && *config_path) exp->config.merge_file(config_path);
    *out = exp.release();
  });
}

void cformer_experiment_destroy(cformer_experiment* exp) { delete exp; }

cformer_status cformer_experiment_set(cformer_experiment* exp, const char* key,
                                      const char* value) {
  if (!exp) return null_arg("exp");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return guarded([&] { exp->config.set(key, value); });
}

cformer_status cformer_experiment_run(cformer_experiment* exp, const char* stage) {
  if (!exp) return null_arg("exp");
  if (!stage) return null_arg("stage");
  return guarded([&] {
    cformer::Pipeline pipeline(exp->config);
    pipeline.run(stage);
  });
}

cformer_status cformer_experiment_config(const cformer_experiment* exp, char** out_json) {
  if (!exp) return null_arg("exp");
  if (!out_json) return null_arg("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const std::string s = exp->config.dump();
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out_json = buf;
  });
}

void cformer_string_free(char* s) { std::free(s); }

cformer_status cformer_write_synthetic(const char* path, size_t num_docs, uint64_t seed) {
  if (!path) return null_arg("path");
  return guarded([&] {
    cformer::SyntheticConfig cfg;
    cfg.num_docs = num_docs;
    cfg.seed = seed;
    const std::string text = cformer::corpus_to_jsonl(cformer::synthetic_corpus(cfg));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) cformer::fail(cformer::ErrorCode::kIo, std::string("cannot write ") + path);
    out << text;
  });
}

cformer_status cformer_sharpen(const double* in, size_t n, double t, double* out) {
  if (!in) return null_arg("in");
  if (!out) return null_arg("out");
  return guarded([&] {
    Eigen::VectorXd l = Eigen::Map<const Eigen::VectorXd>(in, static_cast<Eigen::Index>(n));
    const Eigen::VectorXd s = cformer::sharpen(l, t);
    std::memcpy(out, s.data(), n * sizeof(double));
  });
}

cformer_status cformer_lambda_u(size_t step, size_t ramp_steps, double* out) {
  if (!out) return null_arg("out");
  *out = cformer::lambda_u_at(step, ramp_steps);
  return CFORMER_OK;
}

}  // extern "C"
