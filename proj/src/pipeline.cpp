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

#include "cformer/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cformer/classifier.hpp"

namespace cformer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string file_hash(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, what + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

void merge_checked(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) fail(ErrorCode::kParse, "config must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key()))
      fail(ErrorCode::kInvalidArgument, "unknown config key: " + key);
    json& slot = base[it.key()];
    if (slot.is_object())
      merge_checked(slot, it.value(), key);
    else
      slot = it.value();
  }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument,
         std::string("config value has the wrong type: ") + section + "." + key);
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(defaults()) {}

json ExperimentConfig::defaults() {
  const TrainerConfig t;
  const EncoderConfig e;
  const LdaConfig l;
  const CoherenceConfig c;
  return json{
      {"corpus", {{"path", ""}, {"stopwords", ""}, {"max_df_frac", 1.0}, {"min_count", 1}}},
      {"split", {{"n_gold_per_class", 10}, {"n_unlabeled", 500}, {"n_dev", 200}, {"seed", 0}}},
      {"lda",
       {{"num_topics", 0},
        {"alpha", l.alpha},
        {"beta", l.beta},
        {"sweeps", l.sweeps},
        {"burn_in", l.burn_in},
        {"sample_lag", l.sample_lag},
        {"seed", 0}}},
      {"sweep", {{"k_steps", 3}}},
      {"coherence", {{"epsilon", c.epsilon}, {"window", c.window}, {"gamma", c.gamma}}},
      {"wordlist", {{"method", "relevance"}, {"lambda", 0.2}, {"n", 15}}},
      {"masking", {{"policy", "objective"}, {"rate", 0.15}, {"dump", false}}},
      {"encoder",
       {{"dim", e.dim},
        {"context", e.context},
        {"epochs", e.epochs},
        {"batch_docs", e.batch_docs},
        {"lr", e.lr},
        {"init_std", e.init_std},
        {"weight_decay", e.adamw.weight_decay},
        {"seed", 0}}},
      {"trainer",
       {{"temperature", t.temperature},
        {"conf_threshold", t.conf_threshold},
        {"lambda_u_ramp_steps", t.lambda_u_ramp_steps},
        {"max_steps", t.max_steps},
        {"warmup_steps", t.warmup_steps},
        {"eval_every", t.eval_every},
        {"early_stop_delta", t.early_stop_delta},
        {"early_stop_patience", t.early_stop_patience},
        {"batch_gold", t.batch_gold},
        {"batch_unlabeled", t.batch_unlabeled},
        {"lr_encoder", t.lr_encoder},
        {"lr_head", t.lr_head},
        {"smoothing", t.smoothing},
        {"finetune_lr", t.finetune_lr},
        {"finetune_epochs", t.finetune_epochs},
        {"finetune_batch", t.finetune_batch},
        {"augment_prob", t.augment_prob},
        {"augment_k", t.augment_k},
        {"hidden", t.hidden},
        {"use_mpl", t.use_mpl},
        {"train_embeddings", t.train_embeddings},
        {"weight_decay", t.adamw.weight_decay}}},
      {"seeds", {0, 1, 2, 3, 4}},
      {"output", {{"dir", "out"}}},
      {"compare", {{"variants", {"none", "random", "objective", "tfidf"}}, {"gold_only", true}}},
  };
}

void ExperimentConfig::merge_file(const std::string& path) {
  merge(parse_json(read_file(path), "config file " + path));
}

void ExperimentConfig::merge(const json& patch) { merge_checked(values_, patch, ""); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json patch = parsed;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos;) {
    parts.push_back(rest.substr(0, pos));
    rest = rest.substr(pos + 1);
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) fail(ErrorCode::kInvalidArgument, "bad config key: " + key);
    patch = json{{*it, patch}};
  }
  merge(patch);
}

std::string ExperimentConfig::dump() const { return values_.dump(2); }

std::uint64_t ExperimentConfig::hash(const std::vector<std::string>& sections) const {
  std::uint64_t h = fnv1a("cformer-config");
  for (const auto& s : sections) {
    h = fnv1a(s, h);
    h = fnv1a(values_.at(s).dump(), h);
  }
  return h;
}

std::string ExperimentConfig::out_dir() const {
  return get<std::string>(values_, "output", "dir");
}

PreprocessConfig ExperimentConfig::preprocess() const {
  PreprocessConfig p;
  p.max_df_frac = get<double>(values_, "corpus", "max_df_frac");
  p.min_count = get<std::uint64_t>(values_, "corpus", "min_count");
  require(p.max_df_frac > 0.0 && p.max_df_frac <= 1.0, "corpus.max_df_frac must be in (0, 1]");
  require(p.min_count >= 1, "corpus.min_count must be >= 1");
  return p;
}

SplitConfig ExperimentConfig::split() const {
  SplitConfig s;
  s.n_gold_per_class = get<std::size_t>(values_, "split", "n_gold_per_class");
  s.n_unlabeled = get<std::size_t>(values_, "split", "n_unlabeled");
  s.n_dev = get<std::size_t>(values_, "split", "n_dev");
  s.seed = get<std::uint64_t>(values_, "split", "seed");
  return s;
}

LdaConfig ExperimentConfig::lda() const {
  LdaConfig l;
  l.num_topics = get<std::size_t>(values_, "lda", "num_topics");
  l.alpha = get<double>(values_, "lda", "alpha");
  l.beta = get<double>(values_, "lda", "beta");
  l.sweeps = get<std::size_t>(values_, "lda", "sweeps");
  l.burn_in = get<std::size_t>(values_, "lda", "burn_in");
  l.sample_lag = get<std::size_t>(values_, "lda", "sample_lag");
  l.seed = get<std::uint64_t>(values_, "lda", "seed");
  return l;
}

CoherenceConfig ExperimentConfig::coherence() const {
  CoherenceConfig c;
  c.epsilon = get<double>(values_, "coherence", "epsilon");
  c.window = get<std::size_t>(values_, "coherence", "window");
  c.gamma = get<double>(values_, "coherence", "gamma");
  require(c.epsilon > 0.0, "coherence.epsilon must be positive");
  require(c.window >= 1, "coherence.window must be >= 1");
  return c;
}

EncoderConfig ExperimentConfig::encoder() const {
  EncoderConfig e;
  e.dim = get<Eigen::Index>(values_, "encoder", "dim");
  e.context = get<std::size_t>(values_, "encoder", "context");
  e.epochs = get<std::size_t>(values_, "encoder", "epochs");
  e.batch_docs = get<std::size_t>(values_, "encoder", "batch_docs");
  e.lr = get<double>(values_, "encoder", "lr");
  e.init_std = get<double>(values_, "encoder", "init_std");
  e.adamw.weight_decay = get<double>(values_, "encoder", "weight_decay");
  e.seed = get<std::uint64_t>(values_, "encoder", "seed");
  return e;
}

TrainerConfig ExperimentConfig::trainer(std::uint64_t seed) const {
  TrainerConfig t;
  const json& j = values_;
  t.temperature = get<double>(j, "trainer", "temperature");
  t.conf_threshold = get<double>(j, "trainer", "conf_threshold");
  t.lambda_u_ramp_steps = get<std::size_t>(j, "trainer", "lambda_u_ramp_steps");
  t.max_steps = get<std::size_t>(j, "trainer", "max_steps");
  t.warmup_steps = get<std::size_t>(j, "trainer", "warmup_steps");
  t.eval_every = get<std::size_t>(j, "trainer", "eval_every");
  t.early_stop_delta = get<double>(j, "trainer", "early_stop_delta");
  t.early_stop_patience = get<std::size_t>(j, "trainer", "early_stop_patience");
  t.batch_gold = get<std::size_t>(j, "trainer", "batch_gold");
  t.batch_unlabeled = get<std::size_t>(j, "trainer", "batch_unlabeled");
  t.lr_encoder = get<double>(j, "trainer", "lr_encoder");
  t.lr_head = get<double>(j, "trainer", "lr_head");
  t.smoothing = get<double>(j, "trainer", "smoothing");
  t.finetune_lr = get<double>(j, "trainer", "finetune_lr");
  t.finetune_epochs = get<std::size_t>(j, "trainer", "finetune_epochs");
  t.finetune_batch = get<std::size_t>(j, "trainer", "finetune_batch");
  t.augment_prob = get<double>(j, "trainer", "augment_prob");
  t.augment_k = get<std::size_t>(j, "trainer", "augment_k");
  t.hidden = get<std::size_t>(j, "trainer", "hidden");
  t.use_mpl = get<bool>(j, "trainer", "use_mpl");
  t.train_embeddings = get<bool>(j, "trainer", "train_embeddings");
  t.adamw.weight_decay = get<double>(j, "trainer", "weight_decay");
  t.seed = seed;
  t.validate();
  return t;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  try {
    out = values_.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, "seeds must be a list of non-negative integers");
  }
  require(!out.empty(), "seeds must not be empty");
  return out;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "ingest", "sweep", "wordlist", "pretrain", "train", "eval", "report", "compare"};
  return names;
}

std::vector<Document> PreparedData::training_text() const {
  std::vector<Document> out;
  for (const auto& d : splits.gold) out.push_back({d.id, d.tokens, std::nullopt});
  for (const auto& d : splits.unlabeled) out.push_back({d.id, d.tokens, std::nullopt});
  return out;
}

std::string prepared_to_json(const PreparedData& data) {
  json docs = json::array();
  for (const auto& d : data.corpus.docs)
    docs.push_back({{"id", d.id},
                    {"tokens", d.tokens},
                    {"label", d.label ? json(*d.label) : json(nullptr)}});
  auto ids = [](const auto& part) {
    json out = json::array();
    for (const auto& d : part) out.push_back(d.id);
    return out;
  };
  json j = {{"format", "cformer-corpus"},
            {"version", 1},
            {"vocab_hash", hex64(data.corpus.vocab.hash())},
            {"vocab", data.corpus.vocab.words()},
            {"classes", data.corpus.class_names},
            {"docs", docs},
            {"splits",
             {{"gold", ids(data.splits.gold)},
              {"unlabeled", ids(data.splits.unlabeled)},
              {"dev", ids(data.splits.dev)},
              {"test", ids(data.splits.test)}}}};
  return j.dump();
}

PreparedData prepared_from_json(const std::string& text) {
  const json j = parse_json(text, "corpus artifact");
  PreparedData out;
  try {
    if (j.at("format") != "cformer-corpus" || j.at("version") != 1)
      fail(ErrorCode::kParse, "not a cformer corpus artifact");
    for (const auto& w : j.at("vocab")) out.corpus.vocab.intern(w.get<std::string>());
    out.corpus.class_names = j.at("classes").get<std::vector<std::string>>();
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& d : j.at("docs")) {
      Document doc;
      doc.id = d.at("id").get<std::string>();
      doc.tokens = d.at("tokens").get<std::vector<WordId>>();
      for (WordId w : doc.tokens)
        if (w >= out.corpus.vocab.size()) fail(ErrorCode::kParse, "token id out of range");
      if (!d.at("label").is_null()) doc.label = d.at("label").get<ClassId>();
      index.emplace(doc.id, out.corpus.docs.size());
      out.corpus.docs.push_back(std::move(doc));
    }
    out.corpus.vocab.recount(out.corpus.docs);
    const auto& s = j.at("splits");
    auto lookup = [&](const json& id) -> const Document& {
      auto it = index.find(id.get<std::string>());
      if (it == index.end()) fail(ErrorCode::kParse, "split references unknown document");
      return out.corpus.docs[it->second];
    };
    for (const auto& id : s.at("gold")) out.splits.gold.push_back(lookup(id));
    for (const auto& id : s.at("dev")) out.splits.dev.push_back(lookup(id));
    for (const auto& id : s.at("test")) out.splits.test.push_back(lookup(id));
    for (const auto& id : s.at("unlabeled")) {
      const Document& d = lookup(id);
      out.splits.unlabeled.push_back({d.id, d.tokens});
      out.splits.unlabeled_hidden_labels.push_back(d.label.value_or(0));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("corpus artifact: ") + e.what());
  }
  if (hex64(out.corpus.vocab.hash()) != j.at("vocab_hash").get<std::string>())
    fail(ErrorCode::kConfigMismatch, "corpus artifact vocabulary hash mismatch");
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.runs = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Stage bookkeeping.

namespace {

class Workspace {
 public:
  Workspace(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.out_dir()) {
    const fs::path m = dir_ / "manifest.json";
    if (fs::exists(m))
      manifest_ = parse_json(read_file(m), "manifest");
    else
      manifest_ = json{{"stages", json::object()}};
  }

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& rel) const { return dir_ / rel; }

  // Config sections each stage depends on.
  std::vector<std::string> sections(const std::string& stage) const {
    std::vector<std::string> s = {"corpus", "split"};
    if (stage == "ingest") return s;
    s.insert(s.end(), {"lda", "coherence", "sweep"});
    if (stage == "sweep") return s;
    s.push_back("wordlist");
    if (stage == "wordlist") return s;
    if (stage == "pretrain") {
      s.push_back("masking");
      s.push_back("encoder");
      return s;
    }
    s.insert(s.end(), {"masking", "encoder", "trainer", "seeds"});
    if (stage == "compare") s.push_back("compare");
    return s;
  }

  std::string stage_hash(const std::string& stage) const {
    return hex64(cfg_.hash(sections(stage)));
  }

  // Verifies that `stage` ran under the current config and that its
  // artifacts are unchanged since.
  void require_stage(const std::string& stage, const std::string& consumer) const {
    const json& stages = manifest_.at("stages");
    if (!stages.contains(stage))
      fail(ErrorCode::kMissingPrerequisite,
           "stage '" + consumer + "' needs stage '" + stage + "'; run '" + stage + "' first");
    const json& entry = stages.at(stage);
    if (entry.at("config_hash") != stage_hash(stage))
      fail(ErrorCode::kConfigMismatch,
           "config changed since stage '" + stage + "' ran; rerun '" + stage + "'");
    for (auto it = entry.at("outputs").begin(); it != entry.at("outputs").end(); ++it) {
      const fs::path p = path(it.key());
      if (!fs::exists(p))
        fail(ErrorCode::kMissingPrerequisite,
             "artifact " + it.key() + " of stage '" + stage + "' is missing; rerun '" +
                 stage + "'");
      if (file_hash(p) != it.value())
        fail(ErrorCode::kConfigMismatch, "artifact " + it.key() + " changed since stage '" +
                                             stage + "' ran; rerun '" + stage + "'");
    }
  }

  bool has_stage(const std::string& stage) const {
    return manifest_.at("stages").contains(stage);
  }

  const json& stage_entry(const std::string& stage) const {
    return manifest_.at("stages").at(stage);
  }

  void write(const std::string& rel, const std::string& content) {
    write_file(path(rel), content);
    outputs_[rel] = hex64(fnv1a(content));
  }

  void input(const std::string& name, const fs::path& p) { inputs_[name] = file_hash(p); }

  // Records the stage; dependent stages recorded earlier become stale and
  // are dropped.
  void commit(const std::string& stage, const json& extra = json::object()) {
    json& stages = manifest_["stages"];
    const auto& names = stage_names();
    const auto pos = std::find(names.begin(), names.end(), stage);
    for (auto it = pos + 1; it != names.end(); ++it) stages.erase(*it);
    json entry = {{"config_hash", stage_hash(stage)},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"completed_at", utc_timestamp()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) entry[it.key()] = it.value();
    stages[stage] = entry;
    write_file(path("manifest.json"), manifest_.dump(2) + "\n");
    inputs_ = json::object();
    outputs_ = json::object();
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  json manifest_;
  json inputs_ = json::object();
  json outputs_ = json::object();
};

std::string seed_dir(std::uint64_t seed) { return "runs/seed-" + std::to_string(seed) + "/"; }

WordListMethod parse_method(const std::string& s) {
  if (s == "relevance") return WordListMethod::kRelevance;
  if (s == "tfidf") return WordListMethod::kTfidf;
  if (s == "none") return WordListMethod::kNone;
  fail(ErrorCode::kInvalidArgument, "unknown wordlist.method: " + s);
}

// "objective", "random" or "none" (no pre-training).
std::string masking_policy(const ExperimentConfig& cfg) {
  const auto p = get<std::string>(cfg.values(), "masking", "policy");
  if (p != "objective" && p != "random" && p != "none")
    fail(ErrorCode::kInvalidArgument, "unknown masking.policy: " + p);
  return p;
}

PreparedData load_prepared(const Workspace& ws) {
  return prepared_from_json(read_file(ws.path("corpus.json")));
}

json model_to_json(const TextClassifier& model, bool with_embeddings,
                   std::uint64_t config_hash, std::uint64_t vocab_hash) {
  const AdamWState fresh = AdamWState::for_params(model.head);
  json j = {{"format", "cformer-model"},
            {"version", 1},
            {"config_hash", hex64(config_hash)},
            {"head", json::parse(checkpoint_to_json(model.head, fresh, config_hash))}};
  if (with_embeddings) {
    Embeddings e{model.embeddings, model.embeddings};
    j["embeddings"] = json::parse(embeddings_to_json(e, vocab_hash));
  }
  return j;
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}

void Pipeline::run(const std::string& stage) {
  if (stage == "all") {
    ingest();
    if (cfg_.lda().num_topics == 0 &&
        parse_method(get<std::string>(cfg_.values(), "wordlist", "method")) ==
            WordListMethod::kRelevance)
      sweep();
    wordlist();
    pretrain();
    train();
    eval();
    report();
    return;
  }
  if (stage == "ingest") return ingest();
  if (stage == "sweep") return sweep();
  if (stage == "wordlist") return wordlist();
  if (stage == "pretrain") return pretrain();
  if (stage == "train") return train();
  if (stage == "eval") return eval();
  if (stage == "report") return report();
  if (stage == "compare") return compare();
  fail(ErrorCode::kInvalidArgument, "unknown stage: " + stage);
}

void Pipeline::ingest() {
  Workspace ws(cfg_);
  const auto corpus_path = get<std::string>(cfg_.values(), "corpus", "path");
  if (corpus_path.empty()) fail(ErrorCode::kInvalidArgument, "corpus.path is not set");
  if (!fs::exists(corpus_path)) fail(ErrorCode::kIo, "corpus file not found: " + corpus_path);
  ws.input("corpus", corpus_path);
  std::unordered_set<std::string> stopwords;
  const auto sw_path = get<std::string>(cfg_.values(), "corpus", "stopwords");
  if (!sw_path.empty()) {
    stopwords = load_stopwords(sw_path);
    ws.input("stopwords", sw_path);
  }
  PreparedData data;
  data.corpus = preprocess(ingest_jsonl(corpus_path), stopwords, cfg_.preprocess());
  data.splits = split(data.corpus, cfg_.split());
  ws.write("corpus.json", prepared_to_json(data));
  ws.write("config.json", cfg_.dump() + "\n");
  ws.commit("ingest", {{"documents", data.corpus.docs.size()},
                       {"vocab_size", data.corpus.vocab.size()}});
}

void Pipeline::sweep() {
  Workspace ws(cfg_);
  ws.require_stage("ingest", "sweep");
  const PreparedData data = load_prepared(ws);
  const auto docs = token_lists(data.training_text());
  const auto k_steps = get<std::size_t>(cfg_.values(), "sweep", "k_steps");
  require(k_steps >= 1, "sweep.k_steps must be >= 1");
  const auto points = coherence_sweep(docs, data.corpus.vocab, data.corpus.num_classes(),
                                      k_steps, cfg_.lda(), cfg_.coherence());
  const std::size_t k = select_k_elbow(points);
  json pts = json::array();
  for (const auto& p : points) pts.push_back({{"K", p.num_topics}, {"score", p.score}});
  ws.write("sweep.csv", sweep_to_csv(points));
  ws.write("sweep.json", json{{"config_hash", ws.stage_hash("sweep")},
                              {"measure", "c_v"},
                              {"points", pts},
                              {"selected_k", k}}
                             .dump(2) + "\n");
  ws.commit("sweep", {{"selected_k", k}});
}

void Pipeline::wordlist() {
  Workspace ws(cfg_);
  ws.require_stage("ingest", "wordlist");
  const PreparedData data = load_prepared(ws);
  const auto& v = cfg_.values();
  const WordListMethod method = parse_method(get<std::string>(v, "wordlist", "method"));
  const auto n = get<std::size_t>(v, "wordlist", "n");
  const auto lambda = get<double>(v, "wordlist", "lambda");
  const auto docs = token_lists(data.training_text());
  const auto& vocab = data.corpus.vocab;
  const CoherenceConfig ccfg = cfg_.coherence();

  json info = {{"config_hash", ws.stage_hash("wordlist")}, {"method", method_name(method)}};
  TopicWordList list;
  list.method = method;
  if (method == WordListMethod::kRelevance) {
    LdaConfig lcfg = cfg_.lda();
    if (lcfg.num_topics == 0) {
      ws.require_stage("sweep", "wordlist");
      lcfg.num_topics = ws.stage_entry("sweep").at("selected_k").get<std::size_t>();
    }
    LdaModel model = fit_lda(docs, vocab.size(), lcfg);
    model.vocab_hash = vocab.hash();
    ws.write("lda.json", lda_to_json(model));
    list = build_relevance_list(model, lambda, std::min(n, vocab.size()));
    info["num_topics"] = lcfg.num_topics;
    info["lambda"] = lambda;
  } else if (method == WordListMethod::kTfidf) {
    list = build_tfidf_list(docs, vocab.size(), std::min(n, vocab.size()));
  }
  info["n"] = n;
  info["words"] = list.words.size();
  // List quality: mean coherence over the per-topic lists (top-10 of each).
  if (!list.per_topic.empty()) {
    std::vector<std::vector<WordId>> heads;
    for (const auto& t : list.per_topic)
      heads.emplace_back(t.begin(), t.begin() + std::min<std::size_t>(10, t.size()));
    bool scorable = true;
    for (const auto& h : heads) scorable = scorable && h.size() >= 2;
    if (scorable) {
      info["quality"] = {
          {"c_v", list_coherence(heads, docs, vocab, CoherenceMeasure::kCv, ccfg)},
          {"c_umass", list_coherence(heads, docs, vocab, CoherenceMeasure::kUMass, ccfg)}};
    }
  }
  ws.write("wordlist.txt", wordlist_to_text(list, vocab));
  ws.write("wordlist.json", info.dump(2) + "\n");
  ws.commit("wordlist");
}

void Pipeline::pretrain() {
  Workspace ws(cfg_);
  ws.require_stage("ingest", "pretrain");
  const PreparedData data = load_prepared(ws);
  const auto& vocab = data.corpus.vocab;
  const std::string policy_name = masking_policy(cfg_);
  const auto rate = get<double>(cfg_.values(), "masking", "rate");
  const EncoderConfig ecfg = cfg_.encoder();
  const auto docs = data.training_text();

  json info = {{"config_hash", ws.stage_hash("pretrain")}, {"policy", policy_name}};
  Embeddings emb;
  if (policy_name == "none") {
    Rng rng(derive_seed(ecfg.seed, 0x1417));
    emb = Embeddings::random(static_cast<Eigen::Index>(vocab.size()), ecfg.dim,
                             ecfg.init_std, rng);
  } else {
    MaskingPolicy policy = MaskingPolicy::random(rate);
    if (policy_name == "objective") {
      ws.require_stage("wordlist", "pretrain");
      const TopicWordList list =
          wordlist_from_text(read_file(ws.path("wordlist.txt")), vocab);
      if (list.words.empty())
        fail(ErrorCode::kData, "objective masking needs a non-empty word list");
      policy = MaskingPolicy::objective(list, rate);
    }
    std::vector<double> losses;
    emb = pretrain_mlm(docs, vocab.size(), policy, ecfg, &losses);
    info["epoch_losses"] = losses;
    if (get<bool>(cfg_.values(), "masking", "dump")) {
      const auto examples = mask_corpus(docs, policy, static_cast<WordId>(vocab.size()), 1,
                                        derive_seed(ecfg.seed, 0xd09));
      ws.write("masked.jsonl", masked_to_jsonl(examples, vocab));
    }
  }
  ws.write("embeddings.json", embeddings_to_json(emb, vocab.hash()));
  ws.write("pretrain.json", info.dump(2) + "\n");
  ws.commit("pretrain");
}

void Pipeline::train() {
  Workspace ws(cfg_);
  ws.require_stage("ingest", "train");
  ws.require_stage("pretrain", "train");
  const PreparedData data = load_prepared(ws);
  const auto vocab_hash = data.corpus.vocab.hash();
  const Embeddings emb =
      embeddings_from_json(read_file(ws.path("embeddings.json")), vocab_hash);
  const std::uint64_t config_hash = cfg_.hash(ws.sections("train"));
  const std::size_t C = data.corpus.num_classes();
  for (std::uint64_t seed : cfg_.seeds()) {
    const TrainerConfig tcfg = cfg_.trainer(seed);
    const TrainResult r = cformer::train(data.splits, emb, C, tcfg);
    const TextClassifier model = finetune_student(r.student, data.splits.gold, tcfg);
    const std::string dir = seed_dir(seed);
    ws.write(dir + "history.csv", history_to_csv(r.history));
    ws.write(dir + "model.json",
             model_to_json(model, tcfg.train_embeddings, config_hash, vocab_hash).dump());
    ws.write(dir + "train.json", json{{"config_hash", hex64(config_hash)},
                                      {"seed", seed},
                                      {"steps_run", r.steps_run},
                                      {"best_dev_acc", r.best_dev_acc}}
                                     .dump(2) + "\n");
  }
  ws.commit("train");
}

void Pipeline::eval() {
  Workspace ws(cfg_);
  ws.require_stage("train", "eval");
  const PreparedData data = load_prepared(ws);
  const auto vocab_hash = data.corpus.vocab.hash();
  const Embeddings base =
      embeddings_from_json(read_file(ws.path("embeddings.json")), vocab_hash);
  const std::uint64_t config_hash = cfg_.hash(ws.sections("eval"));
  const std::size_t C = data.corpus.num_classes();
  for (std::uint64_t seed : cfg_.seeds()) {
    const std::string dir = seed_dir(seed);
    const json m = parse_json(read_file(ws.path(dir + "model.json")), "model artifact");
    TextClassifier model;
    AdamWState state;
    checkpoint_from_json(m.at("head").dump(), config_hash, model.head, state);
    model.embeddings = m.contains("embeddings")
                           ? embeddings_from_json(m.at("embeddings").dump(), vocab_hash).input
                           : base.input;
    const EvalResult r = evaluate(model, data.splits.test, C);
    json per_class = json::object();
    for (std::size_t c = 0; c < C; ++c)
      per_class[data.corpus.class_names[c]] = nan_to_null(r.per_class[c]);
    ws.write(dir + "eval.json", json{{"config_hash", hex64(config_hash)},
                                     {"seed", seed},
                                     {"test_accuracy", r.accuracy},
                                     {"per_class", per_class},
                                     {"test_size", data.splits.test.size()}}
                                    .dump(2) + "\n");
  }
  ws.commit("eval");
}

void Pipeline::report() {
  Workspace ws(cfg_);
  ws.require_stage("eval", "report");
  json runs = json::array();
  std::vector<double> acc;
  for (std::uint64_t seed : cfg_.seeds()) {
    const json e =
        parse_json(read_file(ws.path(seed_dir(seed) + "eval.json")), "eval artifact");
    acc.push_back(e.at("test_accuracy").get<double>());
    runs.push_back({{"seed", seed},
                    {"test_accuracy", e.at("test_accuracy")},
                    {"per_class", e.at("per_class")}});
  }
  const Aggregate a = aggregate(acc);
  ws.write("report.json", json{{"config_hash", ws.stage_hash("report")},
                               {"config", cfg_.values()},
                               {"runs", runs},
                               {"aggregate",
                                {{"runs", a.runs},
                                 {"mean_accuracy", a.mean},
                                 {"stdev_accuracy", a.stdev}}}}
                              .dump(2) + "\n");
  ws.commit("report");
}

// Paper-style comparison: each variant is the same pipeline under a config
// override, run in its own subdirectory.
void Pipeline::compare() {
  Workspace ws(cfg_);
  ws.require_stage("ingest", "compare");
  const auto& v = cfg_.values();
  std::size_t k = get<std::size_t>(v, "lda", "num_topics");
  if (k == 0) {
    ws.require_stage("sweep", "compare");
    k = ws.stage_entry("sweep").at("selected_k").get<std::size_t>();
  }
  struct Variant {
    std::string name;
    json patch;
  };
  std::vector<Variant> variants;
  for (const auto& name : v.at("compare").at("variants")) {
    const auto n = name.get<std::string>();
    if (n == "none")
      variants.push_back({"no-pretrain", {{"masking", {{"policy", "none"}}},
                                          {"wordlist", {{"method", "none"}}}}});
    else if (n == "random")
      variants.push_back({"random", {{"masking", {{"policy", "random"}}},
                                     {"wordlist", {{"method", "none"}}}}});
    else if (n == "objective")
      variants.push_back({"objective", {{"masking", {{"policy", "objective"}}},
                                        {"wordlist", {{"method", "relevance"}}}}});
    else if (n == "tfidf")
      variants.push_back({"tfidf", {{"masking", {{"policy", "objective"}}},
                                    {"wordlist", {{"method", "tfidf"}}}}});
    else
      fail(ErrorCode::kInvalidArgument, "unknown compare variant: " + n);
  }
  if (get<bool>(cfg_.values(), "compare", "gold_only"))
    variants.push_back({"gold-only", {{"masking", {{"policy", "objective"}}},
                                      {"wordlist", {{"method", "relevance"}}},
                                      {"trainer", {{"use_mpl", false}, {"batch_unlabeled", 0}}}}});

  const std::string corpus_json = read_file(ws.path("corpus.json"));
  json table = json::array();
  std::string csv = "variant,mean_accuracy,stdev_accuracy";
  for (auto s : cfg_.seeds()) csv += ",seed_" + std::to_string(s);
  csv += "\n";
  std::unordered_map<std::string, std::vector<double>> per_seed;
  for (const auto& var : variants) {
    ExperimentConfig sub = cfg_;
    sub.merge(var.patch);
    sub.merge(json{{"lda", {{"num_topics", k}}},
                   {"output", {{"dir", (ws.dir() / "compare" / var.name).string()}}}});
    Pipeline p(sub);
    p.ingest();
    p.run("wordlist");
    p.pretrain();
    p.train();
    p.eval();
    p.report();
    const json rep = parse_json(
        read_file(fs::path(sub.out_dir()) / "report.json"), "variant report");
    std::vector<double> accs;
    for (const auto& r : rep.at("runs")) accs.push_back(r.at("test_accuracy").get<double>());
    per_seed[var.name] = accs;
    const Aggregate a = aggregate(accs);
    table.push_back({{"variant", var.name},
                     {"mean_accuracy", a.mean},
                     {"stdev_accuracy", a.stdev},
                     {"per_seed", accs}});
    csv += var.name + "," + format_double(a.mean) + "," + format_double(a.stdev);
    for (double x : accs) csv += "," + format_double(x);
    csv += "\n";
  }
  json out = {{"config_hash", ws.stage_hash("compare")}, {"num_topics", k}, {"table", table}};
  if (per_seed.count("objective") && per_seed.count("random")) {
    std::vector<double> delta;
    for (std::size_t i = 0; i < per_seed["objective"].size(); ++i)
      delta.push_back(per_seed["objective"][i] - per_seed["random"][i]);
    out["objective_minus_random"] = delta;
  }
  std::string md = "| variant | accuracy (mean +- stdev) |\n|---|---|\n";
  for (const auto& row : table) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f +- %.2f",
                  100.0 * row.at("mean_accuracy").get<double>(),
                  100.0 * row.at("stdev_accuracy").get<double>());
    md += "| " + row.at("variant").get<std::string>() + " | " + buf + " |\n";
  }
  ws.write("compare.json", out.dump(2) + "\n");
  ws.write("compare.csv", csv);
  ws.write("compare.md", md);
  ws.commit("compare");
}

}  // namespace cformer
