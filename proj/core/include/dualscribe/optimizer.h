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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dualscribe/tensor.h"

namespace dualscribe {

// Learning rate over the run. kCosine decays from lr to 0 across the
// planned number of steps.
enum class LrSchedule { kConstant, kCosine };

LrSchedule ParseLrSchedule(std::string_view name);
std::string_view LrScheduleName(LrSchedule schedule);

struct TrainConfig {
  std::size_t batch_size = 24;
  std::size_t epochs = 32;
  // Stop after this many optimizer steps; 0 means run every epoch.
  std::size_t max_steps = 0;
  double lr = 3e-4;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  std::optional<double> grad_clip_norm;
  std::uint64_t seed = 0;

  // Throws InvalidArgument when an invariant is violated.
  void Validate() const;

  // Learning rate for 0-based `step` of a run planned to take `total_steps`.
  double LearningRate(std::size_t step, std::size_t total_steps) const;
};

// Per-parameter first and second moments plus the shared step counter.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of `params` from their current gradients.
// When grad_clip_norm is set, gradients are rescaled so their global L2
// norm does not exceed it before the moments are updated. Returns the
// global gradient norm before clipping. Throws InvalidArgument if any
// parameter has no gradient, or if `state` was built for different shapes.
double AdamStep(std::span<const Tensor> params, AdamState& state,
                const TrainConfig& config);

}  // namespace dualscribe
