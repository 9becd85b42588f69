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

#include <benchmark/benchmark.h>

#include "dualscribe/decoding.h"
#include "dualscribe/random.h"
#include "dualscribe/report_model.h"
#include "dualscribe/training.h"

namespace dualscribe {
namespace {

struct Fixture {
  explicit Fixture(std::size_t d) {
    config = ModelConfig::Tiny();
    config.d_model = d;
    config.ffn_dim = 2 * d;
    config.vocab_size = 40;
    InputGeometry g{{4, 4, 16}, {4, 4, 16}};
    model = std::make_unique<ReportModel>(config, Variant::kDoubleFeature, g, 5);
    Rng rng(6);
    std::vector<double> v(4 * 4 * 16);
    for (auto& x : v) x = rng.Uniform();
    features.general.emplace(Tensor::FromData({4, 4, 16}, v));
    for (auto& x : v) x = rng.Uniform();
    features.domain.emplace(Tensor::FromData({4, 4, 16}, v));
  }
  ModelConfig config;
  std::unique_ptr<ReportModel> model;
  ImageFeatures features;
};

void BM_DecoderForward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const ImageFeatures* batch[] = {&f.features};
  const EncoderTrace trace = f.model->EncodeImages(batch);
  TokenBatch tokens{1, 24, std::vector<int>(24, 5)};
  for (auto _ : state) benchmark::DoNotOptimize(f.model->Logits(tokens, trace));
}
BENCHMARK(BM_DecoderForward)->Arg(16)->Arg(32)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  Fixture f(32);
  std::vector<TrainingExample> examples(8, TrainingExample{&f.features, std::vector<int>(20, 7)});
  TrainConfig config;
  config.batch_size = 8;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(Train(*f.model, examples, config));
}
BENCHMARK(BM_TrainStep);

void BM_GreedyDecode(benchmark::State& state) {
  Fixture f(32);
  DecodeConfig config;
  config.max_len = 30;
  config.strategy = state.range(0) == 1 ? DecodeStrategy::kGreedy : DecodeStrategy::kBeam;
  config.beam_width = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Decode(*f.model, f.features, config));
}
BENCHMARK(BM_GreedyDecode)->Arg(1)->Arg(3);

}  // namespace
}  // namespace dualscribe
