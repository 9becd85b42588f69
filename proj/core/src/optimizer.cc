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

#include "dualscribe/optimizer.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dualscribe/errors.h"

namespace dualscribe {

LrSchedule ParseLrSchedule(std::string_view name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "cosine") return LrSchedule::kCosine;
  throw InvalidArgument("unknown lr schedule '" + std::string(name) + "'");
}

std::string_view LrScheduleName(LrSchedule schedule) {
  return schedule == LrSchedule::kConstant ? "constant" : "cosine";
}

double TrainConfig::LearningRate(std::size_t step, std::size_t total_steps) const {
  if (lr_schedule == LrSchedule::kConstant || total_steps == 0) return lr;
  const double progress =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw InvalidArgument("train config: batch_size must be >= 1");
  if (epochs < 1) throw InvalidArgument("train config: epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("train config: lr must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("train config: betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("train config: epsilon must be positive");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) {
    throw InvalidArgument("train config: grad_clip_norm must be positive");
  }
}

double AdamStep(std::span<const Tensor> params, AdamState& state,
                const TrainConfig& config) {
  if (state.m.empty() && state.step == 0) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw InvalidArgument("adam: optimizer state tracks " + std::to_string(state.m.size()) +
                          " parameters, got " + std::to_string(params.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw InvalidArgument("adam: parameter " + std::to_string(i) + " has no gradient");
    }
    if (state.m[i].size() != params[i].size()) {
      throw InvalidArgument("adam: state shape mismatch for parameter " + std::to_string(i));
    }
    for (double g : params[i].grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  double clip = 1.0;
  if (config.grad_clip_norm && norm > *config.grad_clip_norm) {
    clip = *config.grad_clip_norm / norm;
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    auto grad = p.grad();
    auto data = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j] * clip;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      data[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
  return norm;
}

}  // namespace dualscribe
