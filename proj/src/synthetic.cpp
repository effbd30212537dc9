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

#include "cformer/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace cformer {

namespace {

std::string topic_word(std::size_t c, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t%zuw%02zu", c, i);
  return buf;
}

std::string background_word(std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "bg%03zu", i);
  return buf;
}

}  // namespace

Corpus synthetic_corpus(const SyntheticConfig& cfg) {
  require(cfg.num_classes >= 2, "need at least 2 classes");
  require(cfg.num_classes * cfg.topic_words_per_class < cfg.vocab_size,
          "topic blocks must leave room for background words");
  require(cfg.min_length >= 1 && cfg.min_length <= cfg.max_length,
          "bad document length range");
  require(cfg.topic_frac >= 0.0 && cfg.cross_frac >= 0.0 &&
              cfg.topic_frac + cfg.cross_frac <= 1.0,
          "bad token mixture fractions");
  const std::size_t C = cfg.num_classes;
  const std::size_t T = cfg.topic_words_per_class;
  const std::size_t B = cfg.vocab_size - C * T;

  Corpus corpus;
  for (std::size_t c = 0; c < C; ++c) {
    corpus.class_names.push_back("class" + std::to_string(c));
    for (std::size_t i = 0; i < T; ++i) corpus.vocab.intern(topic_word(c, i));
  }
  for (std::size_t i = 0; i < B; ++i) corpus.vocab.intern(background_word(i));

  std::vector<double> zipf(B);
  for (std::size_t i = 0; i < B; ++i) zipf[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> background(zipf.begin(), zipf.end());

  Rng rng(cfg.seed);
  for (std::size_t d = 0; d < cfg.num_docs; ++d) {
    Document doc;
    doc.id = "syn-" + std::to_string(d);
    const auto c = static_cast<ClassId>(d % C);
    doc.label = c;
    const std::size_t len =
        cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
    for (std::size_t t = 0; t < len; ++t) {
      const double u = uniform01(rng);
      WordId w;
      if (u < cfg.topic_frac) {
        w = static_cast<WordId>(c * T + uniform_index(rng, T));
      } else if (u < cfg.topic_frac + cfg.cross_frac) {
        std::size_t other = uniform_index(rng, C - 1);
        if (other >= c) ++other;
        w = static_cast<WordId>(other * T + uniform_index(rng, T));
      } else {
        w = static_cast<WordId>(C * T + background(rng));
      }
      doc.tokens.push_back(w);
    }
    corpus.docs.push_back(std::move(doc));
  }
  corpus.vocab.recount(corpus.docs);
  return corpus;
}

PlantedTopics planted_topic_corpus(std::size_t num_topics, std::size_t words_per_topic,
                                   std::size_t num_docs, std::size_t doc_length,
                                   std::uint64_t seed) {
  require(num_topics >= 1 && words_per_topic >= 1 && doc_length >= 1,
          "bad planted corpus shape");
  PlantedTopics out;
  out.topics.resize(num_topics);
  for (std::size_t k = 0; k < num_topics; ++k) {
    out.corpus.class_names.push_back("topic" + std::to_string(k));
    for (std::size_t i = 0; i < words_per_topic; ++i)
      out.topics[k].push_back(out.corpus.vocab.intern(topic_word(k, i)));
  }
  Rng rng(seed);
  for (std::size_t d = 0; d < num_docs; ++d) {
    Document doc;
    doc.id = "planted-" + std::to_string(d);
    const auto k = static_cast<ClassId>(d % num_topics);
    doc.label = k;
    for (std::size_t t = 0; t < doc_length; ++t)
      doc.tokens.push_back(out.topics[k][uniform_index(rng, words_per_topic)]);
    out.corpus.docs.push_back(std::move(doc));
  }
  out.corpus.vocab.recount(out.corpus.docs);
  return out;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.docs) {
    std::string text;
    for (WordId w : doc.tokens) {
      if (!text.empty()) text += ' ';
      text += corpus.vocab.word(w);
    }
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    j["text"] = text;
    if (doc.label) j["label"] = corpus.class_names.at(*doc.label);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cformer
