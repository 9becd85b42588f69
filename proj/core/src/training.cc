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

#include "dualscribe/training.h"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

TeacherBatch MakeTeacherBatch(std::span<const TrainingExample* const> examples,
                              std::size_t max_len) {
  if (examples.empty()) throw InvalidArgument("teacher batch: no examples");
  if (max_len < 1) throw InvalidArgument("teacher batch: max_len must be positive");
  std::size_t length = 0;
  for (const auto* ex : examples) {
    length = std::max(length, std::min(ex->tokens.size(), max_len - 1) + 1);
  }
  TeacherBatch b;
  b.inputs.batch = examples.size();
  b.inputs.length = length;
  b.inputs.ids.assign(examples.size() * length, kPadId);
  b.targets.assign(examples.size() * length, kPadId);
  b.pad_mask.assign(examples.size() * length, 1);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& tokens = examples[i]->tokens;
    const std::size_t n = std::min(tokens.size(), max_len - 1);
    int* in = b.inputs.ids.data() + i * length;
    int* out = b.targets.data() + i * length;
    std::uint8_t* pad = b.pad_mask.data() + i * length;
    in[0] = kBosId;
    for (std::size_t t = 0; t < n; ++t) {
      in[t + 1] = tokens[t];
      out[t] = tokens[t];
      pad[t] = 0;
    }
    out[n] = kEosId;
    pad[n] = 0;
  }
  return b;
}

Tensor BatchLoss(const ReportModel& model,
                 std::span<const TrainingExample* const> examples,
                 const ForwardOptions& options) {
  std::vector<const ImageFeatures*> features;
  features.reserve(examples.size());
  for (const auto* ex : examples) {
    if (ex->features == nullptr) throw InvalidArgument("training example without features");
    features.push_back(ex->features);
  }
  const TeacherBatch batch = MakeTeacherBatch(examples, model.config().max_len);
  const EncoderTrace trace = model.EncodeImages(features, options);
  const Tensor logits = model.Logits(batch.inputs, trace, options);
  return NllLoss(logits, batch.targets, batch.pad_mask);
}

LossHistory Train(ReportModel& model, std::span<const TrainingExample> examples,
                  const TrainConfig& config, const StepCallback& on_step) {
  config.Validate();
  if (examples.empty()) throw InvalidArgument("train: empty corpus");

  Rng order_rng(Rng::Derive(config.seed, 1));
  Rng dropout_rng(Rng::Derive(config.seed, 2));
  ForwardOptions options;
  options.training = true;
  options.dropout_rng = &dropout_rng;

  std::vector<Tensor> params;
  for (const auto& p : model.parameters().entries()) params.push_back(p.tensor);
  AdamState state;
  LossHistory history;

  std::vector<std::size_t> order(examples.size());
  const std::size_t batches = (examples.size() + config.batch_size - 1) / config.batch_size;
  std::size_t total_steps = config.epochs * batches;
  if (config.max_steps) total_steps = std::min(total_steps, config.max_steps);
  TrainConfig step_config = config;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    order_rng.Shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps && step >= config.max_steps) return history;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const TrainingExample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&examples[order[i]]);

      model.parameters().ZeroGrad();
      Tape tape;
      Tensor loss;
      {
        Tape::Scope scope(tape);
        loss = BatchLoss(model, batch, options);
      }
      tape.Backward(loss);
      step_config.lr = config.LearningRate(step, total_steps);
      AdamStep(params, state, step_config);
      ++step;
      history.push_back({step, epoch, loss.item()});
      if (on_step) on_step(history.back());
    }
  }
  return history;
}

void WriteLossCsv(std::ostream& out, const LossHistory& history) {
  out << "step,epoch,loss\n";
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : history) out << r.step << ',' << r.epoch << ',' << r.loss << '\n';
  out.precision(precision);
}

}  // namespace dualscribe
