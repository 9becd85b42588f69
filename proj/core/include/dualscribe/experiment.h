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

// Train-and-evaluate runner for one variant, and the three-variant
// comparison with its summary and per-condition tables.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualscribe/config.h"
#include "dualscribe/corpus.h"
#include "dualscribe/decoding.h"
#include "dualscribe/features.h"
#include "dualscribe/labeler.h"
#include "dualscribe/metrics.h"
#include "dualscribe/optimizer.h"
#include "dualscribe/report_model.h"
#include "dualscribe/text.h"
#include "dualscribe/training.h"

namespace dualscribe {

inline constexpr std::string_view kSyntheticBanner =
    "synthetic corpus - values not comparable to published MIMIC-CXR results";

struct ExperimentSpec {
  Variant variant = Variant::kDoubleFeature;
  ModelConfig model;  // vocab_size is replaced by the built vocabulary's size
  TrainConfig train;
  DecodeConfig decode;
  BackboneSpec general;
  BackboneSpec domain;
  std::size_t min_freq = 3;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  // Desk-scale defaults: d_model 32, 4 memory slots, 2 + 2 layers, 2 heads,
  // 4x4x16 grids from both stub backbones.
  static ExperimentSpec Default();

  // Keys: seed, variant, min_freq, test_fraction, model.*, train.*,
  // decode.*, general.*, domain.*. Unknown keys raise DataError.
  void Apply(const KeyValueConfig& config);
  KeyValueConfig ToConfig() const;

  // Seeds of the individual stages, derived from `seed`.
  std::uint64_t model_seed() const;
  std::uint64_t split_seed() const { return seed; }
};

// Backbone outputs for every corpus entry. Only the paths the variant reads
// are extracted.
std::vector<ImageFeatures> ExtractFeatures(std::span<const CorpusEntry> corpus,
                                           const ExperimentSpec& spec);
InputGeometry GeometryOf(const ImageFeatures& features);

// Table row for one variant.
struct MetricReport {
  Variant variant = Variant::kDoubleFeature;
  MetricScores nlg;
  ClinicalF1Report clinical;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t scored_count = 0;  // equals test_count
  double final_loss = 0.0;
};

struct ExperimentHooks {
  // Encoder-input route of every forward pass (see ReportModel).
  std::function<void(Variant, std::string_view)> on_encoder_input;
  StepCallback on_step;
};

struct ExperimentResult {
  MetricReport report;
  LossHistory losses;
  Vocabulary vocab;
  std::vector<TextPair> generations;  // test split, in corpus order
  std::unique_ptr<ReportModel> model;
};

// Splits, builds the vocabulary on the train split, trains, decodes the
// test split and scores it.
ExperimentResult RunExperiment(const ExperimentSpec& spec, std::span<const CorpusEntry> corpus,
                               const ExperimentHooks& hooks = {});

// Decodes `entries` with a trained model.
std::vector<TextPair> GenerateReports(const ReportModel& model, const Vocabulary& vocab,
                                      std::span<const CorpusEntry> entries,
                                      std::span<const ImageFeatures> features,
                                      const DecodeConfig& decode);

MetricReport ScoreGenerations(std::span<const TextPair> generations,
                              const RuleSet& rules = RuleSet::Default());

// The same spec and corpus for each of the three variants.
std::vector<MetricReport> Compare(const ExperimentSpec& spec, std::span<const CorpusEntry> corpus,
                                  const ExperimentHooks& hooks = {});

// variant,bleu_1,bleu_2,bleu_3,bleu_4,rouge_l,cider_d,chexbert_f1
void WriteSummaryCsv(std::ostream& out, std::span<const MetricReport> reports);
// condition,frequency,<variant>... with F1 per variant.
void WriteConditionCsv(std::ostream& out, std::span<const MetricReport> reports);
// Both tables plus banner and run metadata.
std::string ComparisonJson(const ExperimentSpec& spec, std::span<const MetricReport> reports,
                           std::size_t corpus_size);
std::string MetricReportJson(const MetricReport& report);

// Writes compare.json, summary.csv and conditions.csv into `dir`.
void WriteComparison(const std::filesystem::path& dir, const ExperimentSpec& spec,
                     std::span<const MetricReport> reports, std::size_t corpus_size);

// Full-precision decimal ("%.17g").
std::string FormatDouble(double value);

}  // namespace dualscribe
