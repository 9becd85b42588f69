// Copyright 2026 The DualScribe Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dualscribe/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"
#include "json.hpp"

namespace dualscribe {

namespace {

ImageSource ParseImage(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": 'image' must be an object");
  if (j.contains("feature_key")) {
    if (!j["feature_key"].is_string()) throw DataError(where + ": 'feature_key' must be a string");
    return FeatureKey{j["feature_key"].get<std::string>()};
  }
  if (!j.contains("height") || !j.contains("width") || !j.contains("pixels") ||
      !j["height"].is_number_unsigned() || !j["width"].is_number_unsigned() ||
      !j["pixels"].is_array()) {
    throw DataError(where + ": image needs height, width and pixels, or feature_key");
  }
  const auto h = j["height"].get<std::size_t>();
  const auto w = j["width"].get<std::size_t>();
  std::vector<double> pixels;
  pixels.reserve(j["pixels"].size());
  for (const auto& p : j["pixels"]) {
    if (!p.is_number()) throw DataError(where + ": non-numeric pixel");
    pixels.push_back(p.get<double>());
  }
  try {
    return SyntheticImage(h, w, std::move(pixels));
  } catch (const InvalidArgument& e) {
    throw DataError(where + ": " + e.what());
  }
}

LabelVector ParseLabels(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": 'labels' must be an object");
  LabelVector labels;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto condition = ParseCondition(it.key());
    if (!condition) throw DataError(where + ": unknown condition '" + it.key() + "'");
    if (!it->is_string()) throw DataError(where + ": label must be a string");
    const auto name = it->get<std::string>();
    bool found = false;
    for (Label l : {Label::kBlank, Label::kPositive, Label::kNegative, Label::kUncertain}) {
      if (LabelName(l) == name) {
        labels[*condition] = l;
        found = true;
      }
    }
    if (!found) throw DataError(where + ": unknown label '" + name + "'");
  }
  return labels;
}

}  // namespace

std::vector<CorpusEntry> ReadCorpus(std::istream& in, const std::string& source) {
  std::vector<CorpusEntry> corpus;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("report") ||
        !j["report"].is_string() || !j.contains("image")) {
      throw DataError(where + ": expected {id: string, report: string, image: {...}}");
    }
    CorpusEntry entry{j["id"].get<std::string>(), ParseImage(j["image"], where),
                      j["report"].get<std::string>(), std::nullopt};
    if (entry.report.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw DataError(where + ": entry '" + entry.id + "' has an empty report");
    }
    if (!ids.insert(entry.id).second) throw DataError(where + ": duplicate id '" + entry.id + "'");
    if (j.contains("labels")) entry.truth = ParseLabels(j["labels"], where);
    corpus.push_back(std::move(entry));
  }
  return corpus;
}

std::vector<CorpusEntry> ReadCorpusFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus '" + path.string() + "'");
  return ReadCorpus(in, path.string());
}

void WriteCorpus(std::ostream& out, std::span<const CorpusEntry> corpus) {
  for (const auto& e : corpus) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["report"] = e.report;
    if (const auto* image = std::get_if<SyntheticImage>(&e.image)) {
      auto data = image->pixels().data();
      j["image"] = {{"height", image->height()},
                    {"width", image->width()},
                    {"pixels", std::vector<double>(data.begin(), data.end())}};
    } else {
      j["image"] = {{"feature_key", std::get<FeatureKey>(e.image).key}};
    }
    if (e.truth) {
      nlohmann::ordered_json labels = nlohmann::ordered_json::object();
      for (Condition c : AllConditions()) {
        if ((*e.truth)[c] != Label::kBlank) {
          labels[std::string(ConditionName(c))] = LabelName((*e.truth)[c]);
        }
      }
      j["labels"] = std::move(labels);
    }
    out << j.dump() << '\n';
  }
}

void WriteCorpusFile(const std::filesystem::path& path, std::span<const CorpusEntry> corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus '" + path.string() + "'");
  WriteCorpus(out, corpus);
  if (!out) throw DataError("failed writing corpus '" + path.string() + "'");
}

CorpusSplit SplitCorpus(std::span<const CorpusEntry> corpus, double test_fraction,
                        std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must be in [0, 1)");
  }
  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = Rng::Derive(seed, StableHash(corpus[i].id));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return corpus[a].id < corpus[b].id;
  });
  // The epsilon keeps e.g. 0.1 * 30 from rounding up to 4.
  std::size_t n_test =
      static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  if (n > 0) n_test = std::min(n_test, n - 1);
  CorpusSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace dualscribe
