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
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dualscribe/optimizer.h"
#include "dualscribe/report_model.h"

namespace dualscribe {

// One image/report pair. `tokens` excludes BOS/EOS; it is truncated to
// max_len - 1 tokens when batches are built.
struct TrainingExample {
  const ImageFeatures* features = nullptr;
  std::vector<int> tokens;
};

struct LossRecord {
  std::size_t step = 0;   // 1-based optimizer step
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
};
using LossHistory = std::vector<LossRecord>;

// Teacher-forced decoder inputs/targets for a batch: inputs are
// [BOS, t1..tn], targets [t1..tn, EOS], right-padded with PAD.
struct TeacherBatch {
  TokenBatch inputs;
  std::vector<int> targets;
  std::vector<std::uint8_t> pad_mask;  // 1 = padding
};
TeacherBatch MakeTeacherBatch(std::span<const TrainingExample* const> examples,
                              std::size_t max_len);

// Mean NLL of one batch; records onto the active tape when there is one.
Tensor BatchLoss(const ReportModel& model,
                 std::span<const TrainingExample* const> examples,
                 const ForwardOptions& options = {});

using StepCallback = std::function<void(const LossRecord&)>;

// Runs epochs x ceil(N / batch_size) Adam steps (or max_steps, if smaller)
// over seeded shuffles of `examples`. Deterministic for a fixed seed.
// Throws InvalidArgument on an empty corpus.
LossHistory Train(ReportModel& model, std::span<const TrainingExample> examples,
                  const TrainConfig& config, const StepCallback& on_step = {});

// "step,epoch,loss" with full-precision losses.
void WriteLossCsv(std::ostream& out, const LossHistory& history);

}  // namespace dualscribe
