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

// Synthetic image/report corpus with labels known by construction.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dualscribe/corpus.h"
#include "dualscribe/labeler.h"

namespace dualscribe {

struct SynthConfig {
  std::size_t n = 200;
  std::uint64_t seed = 0;
  std::size_t image_size = 32;  // multiple of 4, >= 16
  // Positive rate of the k-th most frequent condition (k = 0..12) is
  // max_frequency * (k + 1)^-skew.
  double max_frequency = 0.35;
  double skew = 1.0;
  // Among entries where a condition is not positive.
  double uncertain_rate = 0.05;
  double negative_rate = 0.2;
  double noise = 0.03;

  void Validate() const;
};

// The 13 findings (everything but No Finding), most frequent first.
const std::array<Condition, kNumConditions - 1>& FrequencyOrder();

// Exact number of entries in which the k-th condition of FrequencyOrder()
// is positive: round(n * max_frequency * (k + 1)^-skew).
std::size_t TargetPositiveCount(const SynthConfig& config, std::size_t rank);

// Deterministic template text: one sentence per non-blank finding, in
// FrequencyOrder(), built from each condition's first rule phrase. Reports
// without a positive finding open with "No acute cardiopulmonary process."
// Labels for No Finding are ignored; the result always labels back to
// CanonicalLabels(labels) under the default rules.
std::string SyntheticReport(const LabelVector& labels);

// Sets No Finding to Positive exactly when no other condition is Positive,
// Blank otherwise.
LabelVector CanonicalLabels(LabelVector labels);

// Grayscale rendering: each finding owns one cell of a 4 x 4 layout;
// positive findings are bright blobs, uncertain ones faint blobs, negative
// mentions dim dots, over background noise.
SyntheticImage RenderImage(const LabelVector& labels, const SynthConfig& config,
                           std::uint64_t seed);

// Bitwise reproducible for a fixed config.
std::vector<CorpusEntry> SynthesizeCorpus(const SynthConfig& config);

}  // namespace dualscribe
