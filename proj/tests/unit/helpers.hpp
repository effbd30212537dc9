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

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cformer/corpus.hpp"

namespace testing {

// Builds a corpus through the JSONL ingest path.
inline cformer::Corpus make_labeled(
    const std::vector<std::pair<std::string, std::string>>& docs) {
  std::string jsonl;
  for (const auto& [text, label] : docs) {
    nlohmann::json j = {{"text", text}};
    if (!label.empty()) j["label"] = label;
    jsonl += j.dump() + "\n";
  }
  return cformer::ingest_jsonl_lines(jsonl);
}

inline cformer::Corpus make_corpus(const std::vector<std::string>& texts) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& t : texts) docs.emplace_back(t, "");
  return make_labeled(docs);
}

inline cformer::WordId id(const cformer::Corpus& c, const std::string& w) {
  return *c.vocab.find(w);
}

}  // namespace testing
