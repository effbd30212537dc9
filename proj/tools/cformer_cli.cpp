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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cformer/cformer.h"

namespace {

int report_failure(cformer_status status, const std::string& stage) {
  std::string msg = cformer_last_error();
  for (char& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error: status=%s stage=%s message=\"%s\"\n",
               cformer_status_name(status), stage.c_str(), msg.c_str());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cformer: topic-word masking and meta pseudo label training"};
  app.require_subcommand(1);

  std::string config_path, out_dir, masking, corpus;
  std::vector<std::string> overrides;
  long long seed = -1;

  const std::vector<std::string> stages = {"ingest", "sweep",  "wordlist", "pretrain", "train",
                                           "eval",   "report", "compare",  "all"};
  for (const auto& name : stages) {
    auto* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "single run seed (replaces the seeds list)");
    sub->add_option("--masking", masking, "masking policy: objective, random or none")
        ->check(CLI::IsMember({"objective", "random", "none"}));
    sub->add_option("--corpus", corpus, "input corpus (JSONL)");
    sub->add_option("--set", overrides, "config override key=value (repeatable)");
  }

  auto* synth = app.add_subcommand("synth", "write the planted synthetic corpus");
  std::string synth_out;
  std::size_t synth_docs = 1240;
  unsigned long long synth_seed = 1000;
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_option("--docs", synth_docs, "number of documents");
  synth->add_option("--seed", synth_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    const cformer_status st = cformer_write_synthetic(synth_out.c_str(), synth_docs, synth_seed);
    if (st != CFORMER_OK) return report_failure(st, "synth");
    return 0;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  cformer_experiment* exp = nullptr;
  cformer_status st =
      cformer_experiment_create(config_path.empty() ? nullptr : config_path.c_str(), &exp);
  if (st != CFORMER_OK) return report_failure(st, stage);

  auto set = [&](const std::string& key, const std::string& value) {
    if (st == CFORMER_OK) st = cformer_experiment_set(exp, key.c_str(), value.c_str());
  };
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr,
                   "error: status=invalid_argument stage=%s message=\"--set expects key=value\"\n",
                   stage.c_str());
      cformer_experiment_destroy(exp);
      return CFORMER_E_INVALID_ARGUMENT;
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!out_dir.empty()) set("output.dir", "\"" + out_dir + "\"");
  if (!corpus.empty()) set("corpus.path", "\"" + corpus + "\"");
  if (!masking.empty()) set("masking.policy", "\"" + masking + "\"");
  if (seed >= 0) set("seeds", "[" + std::to_string(seed) + "]");
  if (st == CFORMER_OK) st = cformer_experiment_run(exp, stage.c_str());
  cformer_experiment_destroy(exp);
  if (st != CFORMER_OK) return report_failure(st, stage);
  return 0;
}
