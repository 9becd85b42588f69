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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"
#include "json.hpp"

namespace dualscribe {
namespace {

using C = Condition;
using L = Label;

// Minimal valid rules: each condition matches its own lowercased name.
nlohmann::json MinimalRules() {
  nlohmann::json j;
  j["window"] = 3;
  for (Condition c : AllConditions()) {
    std::string phrase(ConditionName(c));
    std::transform(phrase.begin(), phrase.end(), phrase.begin(), ::tolower);
    j[std::string(ConditionName(c))] = {
        {"phrases", {phrase}}, {"negation", {"no"}}, {"uncertain", {"maybe"}}};
  }
  return j;
}

TEST(ConditionTest, NamesRoundTripInColumnOrder) {
  ASSERT_EQ(AllConditions().size(), kNumConditions);
  EXPECT_EQ(ConditionName(AllConditions().front()), "No Finding");
  EXPECT_EQ(ConditionName(AllConditions().back()), "Support Devices");
  for (std::size_t i = 0; i < kNumConditions; ++i) {
    const Condition c = AllConditions()[i];
    EXPECT_EQ(Index(c), i);
    EXPECT_EQ(ParseCondition(ConditionName(c)), c);
  }
  EXPECT_FALSE(ParseCondition("Broken Heart").has_value());
  EXPECT_EQ(LabelName(L::kUncertain), "Uncertain");
  EXPECT_EQ(LabelName(L::kBlank), "Blank");
}

TEST(LabelReportTest, BasicMentions) {
  EXPECT_EQ(LabelReport("Severe cardiomegaly.")[C::kCardiomegaly], L::kPositive);
  EXPECT_EQ(LabelReport("There is no evidence of pneumonia.")[C::kPneumonia], L::kNegative);
  EXPECT_EQ(LabelReport("Possible left lower lobe pneumonia.")[C::kPneumonia], L::kUncertain);
  EXPECT_EQ(LabelReport("No acute cardiopulmonary process.")[C::kNoFinding], L::kPositive);
  EXPECT_EQ(LabelReport("Pacemaker in place.")[C::kSupportDevices], L::kPositive);
  const LabelVector v = LabelReport("Small right pleural effusion.");
  EXPECT_EQ(v[C::kPleuralEffusion], L::kPositive);
  EXPECT_EQ(v[C::kCardiomegaly], L::kBlank);
}

TEST(LabelReportTest, EmptyReportIsAllBlank) {
  EXPECT_EQ(LabelReport(""), LabelVector{});
  EXPECT_EQ(LabelReport(" . ; "), LabelVector{});
}

TEST(LabelReportTest, CueScopeEndsAtSentenceOrWindow) {
  EXPECT_EQ(LabelReport("No effusion. Cardiomegaly.")[C::kCardiomegaly], L::kPositive);
  EXPECT_EQ(LabelReport("No effusion; cardiomegaly")[C::kCardiomegaly], L::kPositive);
  // The default window is 5 tokens back from the phrase.
  ASSERT_EQ(RuleSet::Default().window(), 5u);
  EXPECT_EQ(LabelReport("no a b c d cardiomegaly")[C::kCardiomegaly], L::kNegative);
  EXPECT_EQ(LabelReport("no a b c d e cardiomegaly")[C::kCardiomegaly], L::kPositive);
  // A cue after the phrase does not apply.
  EXPECT_EQ(LabelReport("cardiomegaly, no change")[C::kCardiomegaly], L::kPositive);
}

TEST(LabelReportTest, ConflictingMentionsResolveByPriority) {
  EXPECT_EQ(LabelReport("No pneumothorax. Small apical pneumothorax.")[C::kPneumothorax],
            L::kPositive);
  EXPECT_EQ(LabelReport("Possible pneumonia. No pneumonia.")[C::kPneumonia], L::kUncertain);
  EXPECT_EQ(LabelReport("Edema. Possible edema.")[C::kEdema], L::kPositive);
  // Negation beats uncertainty within one mention.
  EXPECT_EQ(LabelReport("no possible edema")[C::kEdema], L::kNegative);
}

TEST(LabelReportTest, MatchesWholeTokensOnly) {
  EXPECT_EQ(LabelReport("Effusions are small.")[C::kPleuralEffusion], L::kPositive);
  EXPECT_EQ(LabelReport("Noeffusion")[C::kPleuralEffusion], L::kBlank);
}

TEST(LabelReportTest, BatchEqualsIndividualAndIsOrderIndependent) {
  const std::vector<std::string> texts{"Cardiomegaly.", "No edema.", "", "Possible fracture."};
  const auto batch = LabelReports(texts);
  ASSERT_EQ(batch.size(), texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(batch[i], LabelReport(texts[i]));
  std::vector<std::string> reversed(texts.rbegin(), texts.rend());
  const auto rb = LabelReports(reversed);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(rb[i], batch[texts.size() - 1 - i]);
}

TEST(RuleSetTest, CustomRulesAreUsed) {
  const RuleSet rules = RuleSet::FromJson(MinimalRules().dump());
  EXPECT_EQ(rules.window(), 3u);
  EXPECT_EQ(rules.rules(C::kPleuralEffusion).phrases[0],
            (TokenSequence{"pleural", "effusion"}));
  EXPECT_EQ(LabelReport("maybe edema", rules)[C::kEdema], L::kUncertain);
  EXPECT_EQ(LabelReport("possible edema", rules)[C::kEdema], L::kPositive);
}

TEST(RuleSetTest, MalformedRulesRaiseDataError) {
  EXPECT_THROW(RuleSet::FromJson("{"), DataError);
  EXPECT_THROW(RuleSet::FromJson("[]"), DataError);
  auto j = MinimalRules();
  j.erase("Edema");
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  j = MinimalRules();
  j["Edema"]["phrases"] = nlohmann::json::array();
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  j = MinimalRules();
  j["Edema"]["negation"] = {1};
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  j = MinimalRules();
  j["Edema"]["phrases"] = {" . "};
  EXPECT_NO_THROW(RuleSet::FromJson(j.dump()));  // "." is a token
  j["Edema"]["phrases"] = {"   "};
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  j = MinimalRules();
  j["Heartbreak"] = {{"phrases", {"x"}}};
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  j = MinimalRules();
  j["window"] = -1;
  EXPECT_THROW(RuleSet::FromJson(j.dump()), DataError);
  EXPECT_THROW(RuleSet::FromFile("/nonexistent/rules.json"), DataError);
}

TEST(RuleSetTest, FromFileReadsJson) {
  const auto path = std::filesystem::temp_directory_path() / "dualscribe_rules_test.json";
  std::ofstream(path) << MinimalRules().dump(2);
  EXPECT_EQ(RuleSet::FromFile(path).window(), 3u);
}

TEST(F1Test, HandExamples) {
  EXPECT_EQ(F1(3, 1, 1).value, 0.75);
  EXPECT_EQ(F1(1, 0, 0).value, 1.0);
  EXPECT_EQ(F1(0, 4, 2).value, 0.0);
  EXPECT_FALSE(F1(0, 4, 2).no_support);
  const F1Score none = F1(0, 0, 0);
  EXPECT_TRUE(none.no_support);
  EXPECT_EQ(none.value, 0.0);
  EXPECT_THROW(F1(-1, 0, 0), InvalidArgument);
  EXPECT_THROW(F1HarmonicForm(0, 0, -1), InvalidArgument);
}

TEST(F1Test, BothFormsAgree) {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const auto tp = static_cast<long long>(rng.UniformInt(50));
    const auto fp = static_cast<long long>(rng.UniformInt(50));
    const auto fn = static_cast<long long>(rng.UniformInt(50));
    EXPECT_NEAR(F1(tp, fp, fn).value, F1HarmonicForm(tp, fp, fn), 1e-12)
        << tp << " " << fp << " " << fn;
  }
}

TEST(ConfusionTest, OnlyPositiveCountsAsPositive) {
  std::vector<LabelVector> pred(4), truth(4);
  pred[0][C::kEdema] = L::kPositive;   // tp
  truth[0][C::kEdema] = L::kPositive;
  pred[1][C::kEdema] = L::kPositive;   // fp
  truth[1][C::kEdema] = L::kUncertain;
  pred[2][C::kEdema] = L::kNegative;   // fn
  truth[2][C::kEdema] = L::kPositive;
  pred[3][C::kEdema] = L::kUncertain;  // tn
  truth[3][C::kEdema] = L::kNegative;
  EXPECT_EQ(CountConfusion(pred, truth, C::kEdema), (ConfusionCounts{1, 1, 1, 1}));
  EXPECT_EQ(CountConfusion(pred, truth, C::kFracture), (ConfusionCounts{0, 0, 0, 4}));
  truth.pop_back();
  EXPECT_THROW(CountConfusion(pred, truth, C::kEdema), InvalidArgument);
}

std::vector<LabelVector> RandomLabels(std::size_t n, Rng& rng) {
  std::vector<LabelVector> out(n);
  for (auto& v : out) {
    for (auto& l : v.labels) l = static_cast<Label>(rng.UniformInt(4));
  }
  return out;
}

TEST(ClinicalF1Test, MicroAverageEqualsF1OfPooledCounts) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pred = RandomLabels(30, rng), truth = RandomLabels(30, rng);
    const ClinicalF1Report r = ClinicalF1(pred, truth);
    ConfusionCounts pooled;
    for (Condition c : AllConditions()) {
      EXPECT_EQ(r.counts[Index(c)], CountConfusion(pred, truth, c));
      pooled += r.counts[Index(c)];
      EXPECT_GE(r.frequency[Index(c)], 0.0);
      EXPECT_LE(r.frequency[Index(c)], 1.0);
    }
    EXPECT_EQ(pooled.tp + pooled.fp + pooled.fn + pooled.tn, 30 * kNumConditions);
    EXPECT_EQ(r.overall.value, F1(static_cast<long long>(pooled.tp),
                                  static_cast<long long>(pooled.fp),
                                  static_cast<long long>(pooled.fn))
                                   .value);
    EXPECT_EQ(r.reports, 30u);
  }
}

TEST(ClinicalF1Test, IdentityAndEmptyPredictions) {
  Rng rng(33);
  const auto truth = RandomLabels(25, rng);
  EXPECT_EQ(ClinicalF1(truth, truth).overall.value, 1.0);
  const std::vector<LabelVector> blank(25);
  EXPECT_EQ(ClinicalF1(blank, truth).overall.value, 0.0);
  EXPECT_TRUE(ClinicalF1(blank, blank).overall.no_support);
  EXPECT_THROW(ClinicalF1(std::span(blank).first(3), truth), InvalidArgument);
}

TEST(ClinicalF1Test, InvariantUnderReportPermutation) {
  Rng rng(34);
  auto pred = RandomLabels(40, rng), truth = RandomLabels(40, rng);
  const ClinicalF1Report a = ClinicalF1(pred, truth);
  std::vector<std::size_t> order(40);
  for (std::size_t i = 0; i < 40; ++i) order[i] = i;
  rng.Shuffle(order);
  std::vector<LabelVector> p2, t2;
  for (std::size_t i : order) {
    p2.push_back(pred[i]);
    t2.push_back(truth[i]);
  }
  const ClinicalF1Report b = ClinicalF1(p2, t2);
  EXPECT_EQ(a.overall.value, b.overall.value);
  EXPECT_EQ(a.counts, b.counts);
}

TEST(ClinicalF1Test, FrequencyIsShareOfPositiveTruth) {
  std::vector<LabelVector> truth(4);
  truth[0][C::kEdema] = L::kPositive;
  truth[1][C::kEdema] = L::kUncertain;
  truth[2][C::kEdema] = L::kPositive;
  const ClinicalF1Report r = ClinicalF1(truth, truth);
  EXPECT_EQ(r.frequency[Index(C::kEdema)], 0.5);
  EXPECT_EQ(r.frequency[Index(C::kFracture)], 0.0);
  EXPECT_TRUE(r.per_condition[Index(C::kFracture)].no_support);
}

TEST(ClinicalF1Test, FromTextAndJson) {
  const std::vector<std::string> truth{"Cardiomegaly.", "No edema.", "Small pneumothorax."};
  const std::vector<std::string> pred{"Cardiomegaly.", "Edema.", "No pneumothorax."};
  const ClinicalF1Report r = ClinicalF1FromText(pred, truth);
  // tp 1 (cardiomegaly), fp 1 (edema), fn 1 (pneumothorax)
  EXPECT_EQ(r.overall.value, 0.5);
  const auto j = nlohmann::json::parse(ClinicalF1ToJson(r));
  EXPECT_EQ(j["averaging"], "micro");
  EXPECT_EQ(j["overall"].get<double>(), 0.5);
  EXPECT_EQ(j["reports"], 3);
  EXPECT_EQ(j["conditions"].size(), kNumConditions);
  EXPECT_EQ(j["conditions"]["Edema"]["fp"], 1);
  EXPECT_EQ(j["conditions"]["Fracture"]["no_support"], true);
}

}  // namespace
}  // namespace dualscribe
