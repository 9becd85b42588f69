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

#include "dualscribe/decoding.h"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "dualscribe/errors.h"
#include "dualscribe/experiment.h"
#include "dualscribe/synth.h"
#include "dualscribe/training.h"

namespace dualscribe {
namespace {

class DecodingTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthConfig synth;
    synth.n = 24;
    synth.seed = 5;
    corpus_ = new std::vector<CorpusEntry>(SynthesizeCorpus(synth));
    features_ = new std::vector<ImageFeatures>(ExtractFeatures(*corpus_, ExperimentSpec::Default()));
    std::vector<std::vector<std::string>> docs;
    for (const auto& e : *corpus_) docs.push_back(Tokenize(e.report));
    const Vocabulary vocab = Vocabulary::Build(docs, 1);
    ModelConfig config = ModelConfig::Tiny();
    config.vocab_size = vocab.size();
    config.max_len = 40;
    const InputGeometry geometry = GeometryOf((*features_)[0]);
    random_ = new ReportModel(config, Variant::kDoubleFeature, geometry, 3);
    // A briefly trained model emits EOS at varied lengths, which is where
    // length normalization and raw log-probability can disagree.
    partial_ = new ReportModel(config, Variant::kDoubleFeature, geometry, 3);
    std::vector<TrainingExample> examples;
    for (std::size_t i = 0; i < corpus_->size(); ++i) {
      examples.push_back({&(*features_)[i], vocab.Encode(docs[i])});
    }
    TrainConfig train;
    train.batch_size = 8;
    train.epochs = 100;
    train.max_steps = 30;
    Train(*partial_, examples, train);
  }
  static void TearDownTestSuite() {
    delete partial_;
    delete random_;
    delete features_;
    delete corpus_;
  }

  static std::vector<CorpusEntry>* corpus_;
  static std::vector<ImageFeatures>* features_;
  static ReportModel* random_;
  static ReportModel* partial_;
};
std::vector<CorpusEntry>* DecodingTest::corpus_ = nullptr;
std::vector<ImageFeatures>* DecodingTest::features_ = nullptr;
ReportModel* DecodingTest::random_ = nullptr;
ReportModel* DecodingTest::partial_ = nullptr;

TEST(DecodeConfigTest, ValidationAndNames) {
  DecodeConfig c;
  EXPECT_EQ(c.strategy, DecodeStrategy::kGreedy);
  EXPECT_EQ(c.beam_width, 1u);
  EXPECT_NO_THROW(c.Validate());
  c.beam_width = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = DecodeConfig{};
  c.max_len = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  for (DecodeStrategy s : {DecodeStrategy::kGreedy, DecodeStrategy::kBeam}) {
    EXPECT_EQ(ParseDecodeStrategy(DecodeStrategyName(s)), s);
  }
  EXPECT_THROW(ParseDecodeStrategy("sample"), InvalidArgument);
}

TEST(HypothesisTest, NormalizedScoreCountsEos) {
  Hypothesis h{{5, 6, 7}, true, -8.0};
  EXPECT_DOUBLE_EQ(h.NormalizedScore(), -2.0);
  Hypothesis cut{{5, 6, 7, 8}, false, -8.0};
  EXPECT_DOUBLE_EQ(cut.NormalizedScore(), -2.0);
}

TEST_F(DecodingTest, BeamWidthOneEqualsGreedy) {
  for (const ReportModel* model : {random_, partial_}) {
    for (const auto& f : *features_) {
      const Hypothesis g = Decode(*model, f, DecodeConfig{});
      const Hypothesis b = Decode(*model, f, DecodeConfig{DecodeStrategy::kBeam, 1});
      EXPECT_EQ(g.tokens, b.tokens);
      EXPECT_EQ(g.log_prob, b.log_prob);
      EXPECT_EQ(g.finished, b.finished);
    }
  }
}

TEST_F(DecodingTest, OutputTerminatesWithinCap) {
  for (std::size_t cap : {1u, 5u, 17u}) {
    for (std::size_t w : {1u, 3u}) {
      const DecodeConfig c{w == 1 ? DecodeStrategy::kGreedy : DecodeStrategy::kBeam, w, cap};
      for (std::size_t i = 0; i < 6; ++i) {
        const Hypothesis h = Decode(*random_, (*features_)[i], c);
        EXPECT_LE(h.tokens.size() + (h.finished ? 1 : 0), cap);
        for (int t : h.tokens) {
          EXPECT_NE(t, kPadId);
          EXPECT_NE(t, kBosId);
          EXPECT_NE(t, kEosId);
        }
      }
    }
  }
  // The model's own max_len also caps decoding.
  const Hypothesis h = Decode(*random_, (*features_)[0], DecodeConfig{DecodeStrategy::kGreedy, 1, 500});
  EXPECT_LE(h.tokens.size(), random_->config().max_len);
}

TEST_F(DecodingTest, ReportedLogProbMatchesTeacherForcing) {
  for (std::size_t w : {1u, 4u}) {
    for (std::size_t i = 0; i < 8; ++i) {
      const Hypothesis h =
          Decode(*partial_, (*features_)[i], DecodeConfig{DecodeStrategy::kBeam, w});
      EXPECT_NEAR(h.log_prob, SequenceLogProb(*partial_, (*features_)[i], h.tokens, h.finished),
                  1e-9);
    }
  }
}

TEST_F(DecodingTest, BeamNeverLessLikelyThanGreedy) {
  std::size_t compared = 0;
  for (const ReportModel* model : {random_, partial_}) {
    for (const auto& f : *features_) {
      const double greedy = Decode(*model, f, DecodeConfig{}).log_prob;
      for (std::size_t w : {2u, 3u, 5u}) {
        const Hypothesis b = Decode(*model, f, DecodeConfig{DecodeStrategy::kBeam, w});
        EXPECT_GE(b.log_prob, greedy - 1e-9) << "width " << w;
        ++compared;
      }
    }
  }
  EXPECT_EQ(compared, 2 * 24 * 3u);
}

TEST_F(DecodingTest, DecodingIsDeterministic) {
  const DecodeConfig c{DecodeStrategy::kBeam, 3};
  for (std::size_t i = 0; i < 4; ++i) {
    const Hypothesis a = Decode(*partial_, (*features_)[i], c);
    const Hypothesis b = Decode(*partial_, (*features_)[i], c);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.log_prob, b.log_prob);
  }
}

TEST_F(DecodingTest, RefusesToRunUnderATape) {
  Tape tape;
  Tape::Scope scope(tape);
  EXPECT_THROW(Decode(*random_, (*features_)[0], DecodeConfig{}), InvalidArgument);
}

TEST_F(DecodingTest, SequenceLogProbIsASumOfLogSoftmax) {
  const std::vector<int> tokens{5, 6};
  const ImageFeatures* batch[] = {&(*features_)[0]};
  const EncoderTrace trace = partial_->EncodeImages(batch);
  const Tensor logits = partial_->Logits(TokenBatch{1, 3, {kBosId, 5, 6}}, trace);
  const std::size_t v = logits.dim(2);
  double expected = 0.0;
  const int targets[] = {5, 6, kEosId};
  for (std::size_t t = 0; t < 3; ++t) {
    long double z = 0.0L;
    for (std::size_t k = 0; k < v; ++k) z += std::exp(static_cast<long double>(logits.data()[t * v + k]));
    expected += static_cast<double>(logits.data()[t * v + targets[t]] - std::log(z));
  }
  EXPECT_NEAR(SequenceLogProb(*partial_, (*features_)[0], tokens, true), expected, 1e-10);
  EXPECT_LT(SequenceLogProb(*partial_, (*features_)[0], tokens, true),
            SequenceLogProb(*partial_, (*features_)[0], tokens, false));
}

}  // namespace
}  // namespace dualscribe
