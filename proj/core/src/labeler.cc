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

#include "dualscribe/labeler.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dualscribe/errors.h"
#include "dualscribe/text.h"
#include "json.hpp"
#include "json_values.h"

namespace dualscribe {

namespace internal {
extern const std::string_view kDefaultRulesJson;
}  // namespace internal

namespace {

constexpr std::array<std::string_view, kNumConditions> kConditionNames = {
    "No Finding",    "Enlarged Cardiomediastinum",
    "Cardiomegaly",  "Lung Lesion",
    "Lung Opacity",  "Edema",
    "Consolidation", "Pneumonia",
    "Atelectasis",   "Pneumothorax",
    "Pleural Effusion", "Pleural Other",
    "Fracture",      "Support Devices",
};

bool IsSentenceBreak(const std::string& token) {
  return token == "." || token == ";" || token == "?" || token == "!";
}

bool MatchesAt(const std::vector<std::string>& tokens, std::size_t at,
               const TokenSequence& pattern) {
  if (at + pattern.size() > tokens.size()) return false;
  return std::equal(pattern.begin(), pattern.end(), tokens.begin() + at);
}

// True when some cue lies wholly inside [lo, end) of the token stream.
bool CueBefore(const std::vector<std::string>& tokens, std::size_t lo, std::size_t end,
               const std::vector<TokenSequence>& cues) {
  for (const auto& cue : cues) {
    if (cue.size() > end - lo) continue;
    for (std::size_t s = lo; s + cue.size() <= end; ++s) {
      if (MatchesAt(tokens, s, cue)) return true;
    }
  }
  return false;
}

int Rank(Label label) {
  switch (label) {
    case Label::kPositive: return 3;
    case Label::kUncertain: return 2;
    case Label::kNegative: return 1;
    case Label::kBlank: return 0;
  }
  return 0;
}

std::vector<TokenSequence> ReadPatterns(const nlohmann::json& node, std::string_view condition,
                                        const char* key, bool required) {
  std::vector<TokenSequence> out;
  if (!node.contains(key)) {
    if (required) {
      throw DataError("labeler rules: condition '" + std::string(condition) + "' lacks '" +
                      key + "'");
    }
    return out;
  }
  const auto& list = node.at(key);
  if (!list.is_array()) {
    throw DataError("labeler rules: '" + std::string(condition) + "." + key +
                    "' must be an array");
  }
  for (const auto& entry : list) {
    if (!entry.is_string()) {
      throw DataError("labeler rules: non-string entry in '" + std::string(condition) + "." +
                      key + "'");
    }
    TokenSequence tokens = Tokenize(entry.get<std::string>());
    if (tokens.empty()) {
      throw DataError("labeler rules: empty pattern in '" + std::string(condition) + "." + key +
                      "'");
    }
    out.push_back(std::move(tokens));
  }
  if (required && out.empty()) {
    throw DataError("labeler rules: condition '" + std::string(condition) + "' has no " + key);
  }
  return out;
}

}  // namespace

const std::array<Condition, kNumConditions>& AllConditions() {
  static const std::array<Condition, kNumConditions> all = [] {
    std::array<Condition, kNumConditions> a{};
    for (std::size_t i = 0; i < kNumConditions; ++i) a[i] = static_cast<Condition>(i);
    return a;
  }();
  return all;
}

std::string_view ConditionName(Condition condition) { return kConditionNames[Index(condition)]; }

std::optional<Condition> ParseCondition(std::string_view name) {
  for (std::size_t i = 0; i < kNumConditions; ++i) {
    if (kConditionNames[i] == name) return static_cast<Condition>(i);
  }
  return std::nullopt;
}

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kBlank: return "Blank";
    case Label::kPositive: return "Positive";
    case Label::kNegative: return "Negative";
    case Label::kUncertain: return "Uncertain";
  }
  return "?";
}

RuleSet RuleSet::FromJson(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("labeler rules: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw DataError("labeler rules: top level must be an object");
  RuleSet set;
  if (root.contains("window")) {
    const auto& w = root.at("window");
    if (!w.is_number_integer() || w.get<long long>() < 0) {
      throw DataError("labeler rules: 'window' must be a non-negative integer");
    }
    set.window_ = w.get<std::size_t>();
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "window") continue;
    if (!ParseCondition(it.key())) {
      throw DataError("labeler rules: unknown condition '" + it.key() + "'");
    }
  }
  for (Condition c : AllConditions()) {
    const std::string name(ConditionName(c));
    if (!root.contains(name) || !root.at(name).is_object()) {
      throw DataError("labeler rules: missing condition '" + name + "'");
    }
    const auto& node = root.at(name);
    ConditionRules& r = set.rules_[Index(c)];
    r.phrases = ReadPatterns(node, name, "phrases", true);
    r.negation = ReadPatterns(node, name, "negation", false);
    r.uncertain = ReadPatterns(node, name, "uncertain", false);
  }
  return set;
}

RuleSet RuleSet::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labeler rules '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return FromJson(text.str());
}

const RuleSet& RuleSet::Default() {
  static const RuleSet rules = FromJson(internal::kDefaultRulesJson);
  return rules;
}

LabelVector LabelReport(std::string_view text, const RuleSet& rules) {
  const std::vector<std::string> tokens = Tokenize(text);
  // Start of the sentence containing each token.
  std::vector<std::size_t> sentence_start(tokens.size());
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    sentence_start[i] = start;
    if (IsSentenceBreak(tokens[i])) start = i + 1;
  }

  LabelVector out;
  for (Condition c : AllConditions()) {
    const ConditionRules& r = rules.rules(c);
    Label best = Label::kBlank;
    for (const auto& phrase : r.phrases) {
      for (std::size_t at = 0; at < tokens.size(); ++at) {
        if (!MatchesAt(tokens, at, phrase)) continue;
        const std::size_t lo = std::max(sentence_start[at], at - std::min(at, rules.window()));
        Label label = Label::kPositive;
        if (CueBefore(tokens, lo, at, r.negation)) {
          label = Label::kNegative;
        } else if (CueBefore(tokens, lo, at, r.uncertain)) {
          label = Label::kUncertain;
        }
        if (Rank(label) > Rank(best)) best = label;
      }
    }
    out[c] = best;
  }
  return out;
}

std::vector<LabelVector> LabelReports(std::span<const std::string> texts, const RuleSet& rules) {
  std::vector<LabelVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(LabelReport(t, rules));
  return out;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

ConfusionCounts CountConfusion(std::span<const LabelVector> predicted,
                               std::span<const LabelVector> truth, Condition condition) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("confusion counts: " + std::to_string(predicted.size()) +
                          " predictions vs " + std::to_string(truth.size()) + " truths");
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i][condition] == Label::kPositive;
    const bool t = truth[i][condition] == Label::kPositive;
    if (p && t) ++counts.tp;
    else if (p) ++counts.fp;
    else if (t) ++counts.fn;
    else ++counts.tn;
  }
  return counts;
}

F1Score F1(long long tp, long long fp, long long fn) {
  if (tp < 0 || fp < 0 || fn < 0) {
    throw InvalidArgument("f1: negative count (tp=" + std::to_string(tp) + ", fp=" +
                          std::to_string(fp) + ", fn=" + std::to_string(fn) + ")");
  }
  if (tp + fp + fn == 0) return {0.0, true};
  const double t = static_cast<double>(tp);
  return {t / (t + 0.5 * static_cast<double>(fp + fn)), false};
}

double F1HarmonicForm(long long tp, long long fp, long long fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw InvalidArgument("f1: negative count");
  const double t = static_cast<double>(tp);
  const double precision = tp + fp == 0 ? 0.0 : t / static_cast<double>(tp + fp);
  const double recall = tp + fn == 0 ? 0.0 : t / static_cast<double>(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

ClinicalF1Report ClinicalF1(std::span<const LabelVector> predicted,
                            std::span<const LabelVector> truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("clinical f1: " + std::to_string(predicted.size()) +
                          " predicted reports vs " + std::to_string(truth.size()) + " truths");
  }
  ClinicalF1Report report;
  report.reports = truth.size();
  ConfusionCounts pooled;
  for (Condition c : AllConditions()) {
    const ConfusionCounts counts = CountConfusion(predicted, truth, c);
    const std::size_t i = Index(c);
    report.counts[i] = counts;
    report.per_condition[i] = F1(static_cast<long long>(counts.tp),
                                 static_cast<long long>(counts.fp),
                                 static_cast<long long>(counts.fn));
    report.frequency[i] =
        truth.empty() ? 0.0
                      : static_cast<double>(counts.tp + counts.fn) / static_cast<double>(truth.size());
    pooled += counts;
  }
  report.overall = F1(static_cast<long long>(pooled.tp), static_cast<long long>(pooled.fp),
                      static_cast<long long>(pooled.fn));
  return report;
}

ClinicalF1Report ClinicalF1FromText(std::span<const std::string> predicted,
                                    std::span<const std::string> truth, const RuleSet& rules) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("clinical f1: " + std::to_string(predicted.size()) +
                          " predicted reports vs " + std::to_string(truth.size()) + " truths");
  }
  const auto p = LabelReports(predicted, rules);
  const auto t = LabelReports(truth, rules);
  return ClinicalF1(p, t);
}

namespace internal {

nlohmann::ordered_json ClinicalF1Json(const ClinicalF1Report& report) {
  nlohmann::ordered_json j;
  j["averaging"] = ClinicalF1Report::kAveraging;
  j["overall"] = report.overall.value;
  j["overall_no_support"] = report.overall.no_support;
  j["reports"] = report.reports;
  nlohmann::ordered_json conditions = nlohmann::ordered_json::object();
  for (Condition c : AllConditions()) {
    const std::size_t i = Index(c);
    const auto& k = report.counts[i];
    conditions[std::string(ConditionName(c))] = {
        {"f1", report.per_condition[i].value},
        {"no_support", report.per_condition[i].no_support},
        {"frequency", report.frequency[i]},
        {"tp", k.tp},
        {"fp", k.fp},
        {"fn", k.fn},
        {"tn", k.tn},
    };
  }
  j["conditions"] = std::move(conditions);
  return j;
}

}  // namespace internal

std::string ClinicalF1ToJson(const ClinicalF1Report& report, int indent) {
  return internal::ClinicalF1Json(report).dump(indent);
}

}  // namespace dualscribe
