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

#pragma once

// Rule-based report labeler and the positive-only clinical F1 arithmetic.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualscribe {

enum class Condition {
  kNoFinding,
  kEnlargedCardiomediastinum,
  kCardiomegaly,
  kLungLesion,
  kLungOpacity,
  kEdema,
  kConsolidation,
  kPneumonia,
  kAtelectasis,
  kPneumothorax,
  kPleuralEffusion,
  kPleuralOther,
  kFracture,
  kSupportDevices,
};

inline constexpr std::size_t kNumConditions = 14;

// All conditions in column order.
const std::array<Condition, kNumConditions>& AllConditions();
std::string_view ConditionName(Condition condition);  // e.g. "Pleural Effusion"
std::optional<Condition> ParseCondition(std::string_view name);
inline std::size_t Index(Condition c) { return static_cast<std::size_t>(c); }

enum class Label { kBlank, kPositive, kNegative, kUncertain };

std::string_view LabelName(Label label);

// Total assignment: one label per condition, Blank when unmentioned.
struct LabelVector {
  std::array<Label, kNumConditions> labels{};  // value-initialized to kBlank

  Label operator[](Condition c) const { return labels[Index(c)]; }
  Label& operator[](Condition c) { return labels[Index(c)]; }
  bool operator==(const LabelVector&) const = default;
};

using TokenSequence = std::vector<std::string>;

struct ConditionRules {
  std::vector<TokenSequence> phrases;
  std::vector<TokenSequence> negation;
  std::vector<TokenSequence> uncertain;
};

// Phrases and cues are stored tokenized, so matching is on whole tokens.
class RuleSet {
 public:
  // {"window": int, "<Condition Name>": {"phrases": [...],
  //  "negation": [...], "uncertain": [...]}, ...}. Every condition must be
  // present with at least one phrase. Throws DataError otherwise.
  static RuleSet FromJson(std::string_view json_text);
  static RuleSet FromFile(const std::filesystem::path& path);
  // The rules shipped in core/data/labeler_rules.json, compiled in.
  static const RuleSet& Default();

  std::size_t window() const { return window_; }
  const ConditionRules& rules(Condition c) const { return rules_[Index(c)]; }

 private:
  std::size_t window_ = 5;
  std::array<ConditionRules, kNumConditions> rules_;
};

// For each phrase occurrence, looks back up to window() tokens (stopping at
// sentence punctuation . ; ? !) for a cue ending before the phrase. A
// negation cue gives Negative, else an uncertainty cue gives Uncertain,
// else Positive. Disagreeing mentions resolve Positive > Uncertain >
// Negative.
LabelVector LabelReport(std::string_view text, const RuleSet& rules = RuleSet::Default());
std::vector<LabelVector> LabelReports(std::span<const std::string> texts,
                                      const RuleSet& rules = RuleSet::Default());

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

// Binary counts where only Positive counts as positive. Throws
// InvalidArgument on a length mismatch.
ConfusionCounts CountConfusion(std::span<const LabelVector> predicted,
                               std::span<const LabelVector> truth, Condition condition);

struct F1Score {
  double value = 0.0;
  bool no_support = false;  // TP + FP + FN == 0
};

// TP / (TP + (FP + FN) / 2). Throws InvalidArgument on negative counts.
F1Score F1(long long tp, long long fp, long long fn);
// 2PR / (P + R), with P or R taken as 0 when undefined.
double F1HarmonicForm(long long tp, long long fp, long long fn);

struct ClinicalF1Report {
  static constexpr std::string_view kAveraging = "micro";

  F1Score overall;  // pooled over all conditions
  std::array<F1Score, kNumConditions> per_condition{};
  std::array<double, kNumConditions> frequency{};  // share of truth Positive
  std::array<ConfusionCounts, kNumConditions> counts{};
  std::size_t reports = 0;
};

ClinicalF1Report ClinicalF1(std::span<const LabelVector> predicted,
                            std::span<const LabelVector> truth);
ClinicalF1Report ClinicalF1FromText(std::span<const std::string> predicted,
                                    std::span<const std::string> truth,
                                    const RuleSet& rules = RuleSet::Default());

// {"averaging", "overall", "overall_no_support", "reports",
//  "conditions": {name: {"f1", "no_support", "frequency", "tp", "fp",
//  "fn", "tn"}}} with doubles at full precision.
std::string ClinicalF1ToJson(const ClinicalF1Report& report, int indent = 2);

}  // namespace dualscribe
