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

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dualscribe/report_model.h"

namespace dualscribe {

enum class DecodeStrategy { kGreedy, kBeam };

struct DecodeConfig {
  DecodeStrategy strategy = DecodeStrategy::kGreedy;
  std::size_t beam_width = 1;
  // Hard cap on emitted tokens (EOS excluded); also capped by the model's
  // max_len.
  std::size_t max_len = 60;

  void Validate() const;
};

DecodeStrategy ParseDecodeStrategy(std::string_view name);
std::string_view DecodeStrategyName(DecodeStrategy strategy);

struct Hypothesis {
  std::vector<int> tokens;  // without BOS/EOS
  bool finished = false;    // ended with EOS (which is counted in log_prob)
  double log_prob = 0.0;    // sum of token log-probabilities

  // Length-normalized score (exponent 1): log_prob / emitted tokens,
  // EOS included.
  double NormalizedScore() const;
};

// Starts from BOS and stops at EOS or the length cap. Greedy takes the
// argmax each step (lowest id on ties); beam search keeps beam_width live
// hypotheses, ranked by length-normalized log-probability, and returns the
// best finished one whose total log-probability is at least the greedy
// result's. PAD and BOS are never emitted.
Hypothesis Decode(const ReportModel& model, const ImageFeatures& image,
                  const DecodeConfig& config);
std::vector<int> Generate(const ReportModel& model, const ImageFeatures& image,
                          const DecodeConfig& config);

// Teacher-forced log-probability of `tokens`, plus EOS when `with_eos`.
double SequenceLogProb(const ReportModel& model, const ImageFeatures& image,
                       std::span<const int> tokens, bool with_eos);

}  // namespace dualscribe
