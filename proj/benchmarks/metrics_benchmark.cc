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

#include "dualscribe/metrics.h"
#include "dualscribe/random.h"

namespace dualscribe {
namespace {

std::vector<EvalPair> RandomPairs(std::size_t n, std::size_t length) {
  Rng rng(4);
  auto sentence = [&] {
    Tokens t;
    for (std::size_t i = 0; i < length; ++i) t.push_back("w" + std::to_string(rng.UniformInt(40)));
    return t;
  };
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.push_back({sentence(), {sentence(), sentence()}});
  return pairs;
}

void BM_Bleu(benchmark::State& state) {
  const auto pairs = RandomPairs(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(Bleu(pairs));
}
BENCHMARK(BM_Bleu)->Range(16, 1024);

void BM_RougeL(benchmark::State& state) {
  const auto pairs = RandomPairs(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(RougeL(pairs));
}
BENCHMARK(BM_RougeL)->Range(16, 1024);

void BM_CiderD(benchmark::State& state) {
  const auto pairs = RandomPairs(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(CiderD(pairs));
}
BENCHMARK(BM_CiderD)->Range(16, 1024);

}  // namespace
}  // namespace dualscribe
