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

#include "cformer/wordlist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cformer {

const char* method_name(WordListMethod m) {
  switch (m) {
    case WordListMethod::kRelevance: return "relevance";
    case WordListMethod::kTfidf: return "tfidf";
    case WordListMethod::kNone: return "none";
  }
  return "none";
}

bool TopicWordList::contains(WordId w) const {
  return std::binary_search(words.begin(), words.end(), w);
}

namespace {

// Indices of the n largest scores, descending, ties by ascending index.
// Descending by score, then by `tiebreak` (if given), then ascending id.
std::vector<WordId> rank_desc(const std::vector<double>& score, std::size_t n,
                              const std::vector<double>* tiebreak = nullptr) {
  std::vector<WordId> ids(score.size());
  std::iota(ids.begin(), ids.end(), WordId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                    ids.end(), [&](WordId a, WordId b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      if (tiebreak && (*tiebreak)[a] != (*tiebreak)[b])
                        return (*tiebreak)[a] > (*tiebreak)[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

}  // namespace

std::vector<SweepPoint> coherence_sweep(const TokenLists& docs,
                                        const Vocabulary& vocab,
                                        std::size_t num_classes,
                                        std::size_t k_steps,
                                        const LdaConfig& lda_cfg,
                                        const CoherenceConfig& cfg) {
  require(num_classes >= 2, "sweep needs m >= 2");
  require(k_steps >= 1, "sweep needs k_steps >= 1");
  const TokenLists windows = virtual_windows(docs, cfg.window);
  const std::size_t top_n = std::min<std::size_t>(10, vocab.size());
  std::vector<SweepPoint> out;
  for (std::size_t i = 1; i <= k_steps; ++i) {
    LdaConfig c = lda_cfg;
    c.num_topics = i * num_classes;
    const LdaModel model = fit_lda(docs, vocab.size(), c);
    double sum = 0.0;
    for (std::size_t k = 0; k < model.num_topics; ++k)
      sum += c_v_windows(topic_top_words(model, k, top_n), windows, vocab, cfg);
    out.push_back({c.num_topics, sum / static_cast<double>(model.num_topics)});
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points,
                         CoherenceMeasure measure) {
  std::ostringstream out;
  out << "K,measure,score\n";
  for (const auto& p : points)
    out << p.num_topics << ',' << measure_name(measure) << ','
        << format_double(p.score) << '\n';
  return out.str();
}

std::size_t select_k_elbow(const std::vector<SweepPoint>& points) {
  if (points.empty())
    fail(ErrorCode::kInvalidArgument, "elbow selection needs at least one point");
  const std::size_t n = points.size();
  double best_score = points[0].score;
  for (const auto& p : points) best_score = std::max(best_score, p.score);
  if (points[0].score >= best_score) return points[0].num_topics;

  // gain[i] = s_i - s_{i-1} for i >= 1, gain[n] = 0.
  std::vector<double> gain(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    gain[i] = points[i].score - points[i - 1].score;
  std::size_t best = 1;
  double best_drop = gain[1] - gain[2];
  for (std::size_t i = 2; i < n; ++i) {
    const double drop = gain[i] - gain[i + 1];
    if (drop > best_drop) {
      best_drop = drop;
      best = i;
    }
  }
  return points[best].num_topics;
}

double relevance(WordId w, std::size_t topic, double lambda,
                 const LdaModel& model) {
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  require(topic < model.num_topics, "topic id out of range");
  require(w < model.vocab_size(), "word id out of range");
  const double phi = model.phi(static_cast<Eigen::Index>(topic), w);
  const double p = model.marginal_word_prob[w];
  if (!(phi > 0.0) || !(p > 0.0))
    fail(ErrorCode::kData, "relevance undefined for zero probabilities");
  return lambda * std::log(phi) + (1.0 - lambda) * std::log(phi / p);
}

TopicWordList build_relevance_list(const LdaModel& model, double lambda,
                                   std::size_t n_per_topic) {
  const std::size_t V = model.vocab_size();
  require(n_per_topic <= V, "n_per_topic exceeds vocabulary size");
  TopicWordList list;
  list.method = WordListMethod::kRelevance;
  list.lambda = lambda;
  list.n = n_per_topic;
  std::vector<double> score(V), raw(V);
  for (std::size_t k = 0; k < model.num_topics; ++k) {
    // Distinct probabilities one ulp apart can share a logarithm; ties in
    // the score fall back to phi itself (lambda = 1) or to the lift.
    const auto row = static_cast<Eigen::Index>(k);
    for (WordId w = 0; w < V; ++w) {
      score[w] = relevance(w, k, lambda, model);
      raw[w] = lambda == 1.0 ? model.phi(row, w)
                             : model.phi(row, w) / model.marginal_word_prob[w];
    }
    list.per_topic.push_back(rank_desc(score, n_per_topic, &raw));
    list.words.insert(list.words.end(), list.per_topic.back().begin(),
                      list.per_topic.back().end());
  }
  std::sort(list.words.begin(), list.words.end());
  list.words.erase(std::unique(list.words.begin(), list.words.end()),
                   list.words.end());
  return list;
}

std::vector<double> tfidf_scores(const TokenLists& docs, std::size_t vocab_size) {
  std::vector<double> df(vocab_size, 0.0);
  std::vector<double> tf_sum(vocab_size, 0.0);
  std::vector<double> count(vocab_size, 0.0);
  std::vector<WordId> seen;
  for (const auto& d : docs) {
    if (d.empty()) continue;
    seen.clear();
    for (WordId w : d) {
      if (count[w] == 0.0) seen.push_back(w);
      count[w] += 1.0;
    }
    for (WordId w : seen) {
      df[w] += 1.0;
      tf_sum[w] += count[w] / static_cast<double>(d.size());
      count[w] = 0.0;
    }
  }
  const double n_docs = static_cast<double>(docs.size());
  std::vector<double> score(vocab_size, 0.0);
  for (std::size_t w = 0; w < vocab_size; ++w) {
    if (df[w] == 0.0) continue;
    score[w] = tf_sum[w] * std::log(n_docs / df[w]) / n_docs;
  }
  return score;
}

TopicWordList build_tfidf_list(const TokenLists& docs, std::size_t vocab_size,
                               std::size_t n_total) {
  require(n_total <= vocab_size, "n_total exceeds vocabulary size");
  TopicWordList list;
  list.method = WordListMethod::kTfidf;
  list.n = n_total;
  list.per_topic.push_back(rank_desc(tfidf_scores(docs, vocab_size), n_total));
  list.words = list.per_topic.front();
  std::sort(list.words.begin(), list.words.end());
  return list;
}

std::string wordlist_to_text(const TopicWordList& list, const Vocabulary& vocab) {
  std::ostringstream out;
  out << "# method=" << method_name(list.method) << " lambda="
      << (list.method == WordListMethod::kRelevance ? format_double(list.lambda)
                                                    : std::string("none"))
      << " n=" << list.n << '\n';
  if (list.method == WordListMethod::kRelevance) {
    for (std::size_t k = 0; k < list.per_topic.size(); ++k) {
      out << "## topic " << k << '\n';
      for (WordId w : list.per_topic[k]) out << vocab.word(w) << '\n';
    }
  } else {
    for (const auto& topic : list.per_topic)
      for (WordId w : topic) out << vocab.word(w) << '\n';
  }
  return out.str();
}

TopicWordList wordlist_from_text(const std::string& text, const Vocabulary& vocab) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# method=", 0) != 0)
    fail(ErrorCode::kParse, "word list: missing '# method=' header");
  TopicWordList list;
  std::istringstream header(line.substr(2));
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, "word list: bad header field " + field);
    const auto key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "method") {
      if (value == "relevance") list.method = WordListMethod::kRelevance;
      else if (value == "tfidf") list.method = WordListMethod::kTfidf;
      else fail(ErrorCode::kParse, "word list: unknown method " + value);
    } else if (key == "lambda") {
      if (value != "none") list.lambda = std::stod(value);
    } else if (key == "n") {
      list.n = std::stoul(value);
    }
  }
  if (list.method == WordListMethod::kTfidf) list.per_topic.emplace_back();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("## topic ", 0) == 0) {
      list.per_topic.emplace_back();
      continue;
    }
    if (list.per_topic.empty())
      fail(ErrorCode::kParse, "word list: word before first '## topic' section");
    const auto id = vocab.find(line);
    if (!id) fail(ErrorCode::kData, "word list: word not in vocabulary: " + line);
    list.per_topic.back().push_back(*id);
  }
  for (const auto& t : list.per_topic)
    list.words.insert(list.words.end(), t.begin(), t.end());
  std::sort(list.words.begin(), list.words.end());
  list.words.erase(std::unique(list.words.begin(), list.words.end()),
                   list.words.end());
  return list;
}

}  // namespace cformer
