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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"
#include "dualscribe/synth.h"

namespace dualscribe {
namespace {

bool SameImage(const SyntheticImage& a, const SyntheticImage& b) {
  return a.height() == b.height() && a.width() == b.width() &&
         std::memcmp(a.pixels().data().data(), b.pixels().data().data(),
                     a.pixels().size() * sizeof(double)) == 0;
}

std::string Line(const std::string& json) { return json + "\n"; }

bool FailsNaming(const std::string& text, const std::string& needle) {
  std::istringstream in(text);
  try {
    ReadCorpus(in, "corpus.jsonl");
  } catch (const DataError& e) {
    const std::string what = e.what();
    return what.find("corpus.jsonl") != std::string::npos &&
           what.find(needle) != std::string::npos;
  }
  return false;
}

// ---------------------------------------------------------------------------
// JSON Lines corpus

TEST(CorpusIoTest, RoundTripPreservesEverything) {
  SynthConfig config;
  config.n = 6;
  config.seed = 2;
  std::vector<CorpusEntry> corpus = SynthesizeCorpus(config);
  corpus.push_back({"precomputed-1", FeatureKey{"img/77"}, "Heart size normal.", std::nullopt});

  std::stringstream buf;
  WriteCorpus(buf, corpus);
  const auto back = ReadCorpus(buf, "buf");
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].report, corpus[i].report);
    EXPECT_EQ(back[i].truth, corpus[i].truth);
    ASSERT_EQ(back[i].image.index(), corpus[i].image.index());
    if (const auto* img = std::get_if<SyntheticImage>(&corpus[i].image)) {
      EXPECT_TRUE(SameImage(*img, std::get<SyntheticImage>(back[i].image)));
    } else {
      EXPECT_EQ(std::get<FeatureKey>(back[i].image).key, "img/77");
    }
  }
}

TEST(CorpusIoTest, FileRoundTripAndMissingFile) {
  SynthConfig config;
  config.n = 3;
  const auto corpus = SynthesizeCorpus(config);
  const auto path = std::filesystem::temp_directory_path() / "dualscribe_corpus_test.jsonl";
  WriteCorpusFile(path, corpus);
  EXPECT_EQ(ReadCorpusFile(path).size(), 3u);
  try {
    ReadCorpusFile("/nonexistent/corpus.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/corpus.jsonl"), std::string::npos);
  }
}

TEST(CorpusIoTest, MalformedLinesRaiseDataErrorWithLineNumbers) {
  const std::string ok = R"({"id": "a", "report": "x", "image": {"feature_key": "k"}})";
  EXPECT_TRUE(FailsNaming(Line(ok) + Line("{oops"), ":2"));
  EXPECT_TRUE(FailsNaming(Line(ok) + Line(ok), "duplicate"));
  EXPECT_TRUE(FailsNaming(Line(R"({"id": "a", "report": "", "image": {"feature_key": "k"}})"), ":1"));
  EXPECT_TRUE(FailsNaming(Line(R"({"id": "a", "image": {"feature_key": "k"}})"), ":1"));
  EXPECT_TRUE(FailsNaming(Line(R"({"id": "a", "report": "x"})"), ":1"));
  EXPECT_TRUE(FailsNaming(
      Line(R"({"id": "a", "report": "x", "image": {"height": 2, "width": 2, "pixels": [1, 2, 3]}})"),
      ":1"));
  EXPECT_TRUE(FailsNaming(
      Line(R"({"id": "a", "report": "x", "image": {"feature_key": "k"}, "labels": {"Edema": "Maybe"}})"),
      ":1"));
  EXPECT_TRUE(FailsNaming(
      Line(R"({"id": "a", "report": "x", "image": {"feature_key": "k"}, "labels": {"Gout": "Positive"}})"),
      ":1"));
  std::istringstream blank("\n" + Line(ok) + "\n");
  EXPECT_EQ(ReadCorpus(blank, "b").size(), 1u);
}

TEST(CorpusIoTest, PartialLabelsAreBlankElsewhere) {
  std::istringstream in(Line(
      R"({"id": "a", "report": "x", "image": {"feature_key": "k"}, "labels": {"Edema": "Positive"}})"));
  const auto corpus = ReadCorpus(in, "in");
  ASSERT_TRUE(corpus[0].truth.has_value());
  EXPECT_EQ((*corpus[0].truth)[Condition::kEdema], Label::kPositive);
  EXPECT_EQ((*corpus[0].truth)[Condition::kFracture], Label::kBlank);
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<CorpusEntry> NamedEntries(std::size_t n) {
  std::vector<CorpusEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"study-" + std::to_string(i * 7919 % 1000), FeatureKey{"k"}, "x", {}});
  }
  return out;
}

TEST(SplitTest, DisjointCoveringAndSized) {
  for (std::size_t n : {1u, 2u, 10u, 30u, 101u}) {
    const auto corpus = NamedEntries(n);
    const CorpusSplit s = SplitCorpus(corpus, 0.1, 3);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (std::size_t i : s.test) EXPECT_TRUE(all.insert(i).second) << "overlap at " << i;
    EXPECT_EQ(all.size(), n);
    EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
    const std::size_t expected_test =
        std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(0.1 * n - 1e-9)));
    EXPECT_EQ(s.test.size(), expected_test) << "n = " << n;
  }
  EXPECT_EQ(SplitCorpus(NamedEntries(30), 0.1).test.size(), 3u);
  EXPECT_TRUE(SplitCorpus(NamedEntries(30), 0.0).test.empty());
  EXPECT_THROW(SplitCorpus(NamedEntries(3), 1.0), InvalidArgument);
  EXPECT_THROW(SplitCorpus(NamedEntries(3), -0.1), InvalidArgument);
}

TEST(SplitTest, MembershipSurvivesReordering) {
  auto corpus = NamedEntries(50);
  auto ids_in_test = [](const std::vector<CorpusEntry>& c, const CorpusSplit& s) {
    std::set<std::string> ids;
    for (std::size_t i : s.test) ids.insert(c[i].id);
    return ids;
  };
  const auto before = ids_in_test(corpus, SplitCorpus(corpus, 0.2, 9));
  Rng rng(1);
  rng.Shuffle(corpus);
  EXPECT_EQ(ids_in_test(corpus, SplitCorpus(corpus, 0.2, 9)), before);
  EXPECT_NE(ids_in_test(corpus, SplitCorpus(corpus, 0.2, 10)), before);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

TEST(SynthTest, BitwiseReproducible) {
  SynthConfig config;
  config.n = 20;
  config.seed = 4;
  const auto a = SynthesizeCorpus(config);
  const auto b = SynthesizeCorpus(config);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].report, b[i].report);
    EXPECT_EQ(a[i].truth, b[i].truth);
    EXPECT_TRUE(SameImage(std::get<SyntheticImage>(a[i].image),
                          std::get<SyntheticImage>(b[i].image)));
  }
  config.seed = 5;
  const auto c = SynthesizeCorpus(config);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].report != c[i].report;
  EXPECT_TRUE(differs);
}

TEST(SynthTest, ReportsLabelBackToTheirTruth) {
  SynthConfig config;
  config.n = 300;
  config.seed = 6;
  config.uncertain_rate = 0.2;
  config.negative_rate = 0.3;
  for (const auto& e : SynthesizeCorpus(config)) {
    ASSERT_TRUE(e.truth.has_value());
    EXPECT_EQ(LabelReport(e.report), *e.truth) << e.report;
  }
}

TEST(SynthTest, TemplateTextIsCanonicalUnderTheLabeler) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    LabelVector v;
    for (auto& l : v.labels) l = static_cast<Label>(rng.UniformInt(4));
    EXPECT_EQ(LabelReport(SyntheticReport(v)), CanonicalLabels(v)) << SyntheticReport(v);
  }
  LabelVector negated;
  negated[Condition::kPneumothorax] = Label::kNegative;
  const std::string text = SyntheticReport(negated);
  EXPECT_EQ(text.rfind("No acute cardiopulmonary process.", 0), 0u) << text;
  EXPECT_EQ(LabelReport(text)[Condition::kPneumothorax], Label::kNegative);
}

TEST(SynthTest, PositiveCountsFollowTheFrequencySchedule) {
  SynthConfig config;
  config.n = 100;
  config.seed = 8;
  const auto corpus = SynthesizeCorpus(config);
  for (std::size_t k = 0; k < FrequencyOrder().size(); ++k) {
    const Condition c = FrequencyOrder()[k];
    const double expected = 100 * config.max_frequency / static_cast<double>(k + 1);
    EXPECT_EQ(TargetPositiveCount(config, k), static_cast<std::size_t>(std::lround(expected)));
    std::size_t count = 0;
    for (const auto& e : corpus) count += (*e.truth)[c] == Label::kPositive;
    EXPECT_LE(std::abs(static_cast<double>(count) - expected), 1.0) << ConditionName(c);
  }
}

TEST(SynthTest, ConfigValidation) {
  SynthConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.image_size = 30;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = SynthConfig{};
  c.n = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = SynthConfig{};
  c.uncertain_rate = 0.7;
  c.negative_rate = 0.5;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = SynthConfig{};
  c.max_frequency = 0.0;
  EXPECT_THROW(SynthesizeCorpus(c), InvalidArgument);
}

TEST(SynthTest, ImagesHaveConfiguredSizeAndDependOnFindings) {
  SynthConfig config;
  config.image_size = 16;
  LabelVector none, cardio;
  cardio[Condition::kCardiomegaly] = Label::kPositive;
  const SyntheticImage a = RenderImage(none, config, 1);
  const SyntheticImage b = RenderImage(cardio, config, 1);
  EXPECT_EQ(a.height(), 16u);
  EXPECT_EQ(a.width(), 16u);
  double diff = 0.0;
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t col = 0; col < 16; ++col) diff += std::abs(a.at(r, col) - b.at(r, col));
  }
  EXPECT_GT(diff, 1.0);
  EXPECT_TRUE(SameImage(a, RenderImage(none, config, 1)));
}

}  // namespace
}  // namespace dualscribe
