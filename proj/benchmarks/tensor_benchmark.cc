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

#include "dualscribe/random.h"
#include "dualscribe/tensor.h"

namespace dualscribe {
namespace {

Tensor Random(Shape shape, Rng& rng) {
  std::vector<double> v(NumElements(shape));
  for (auto& x : v) x = rng.Normal();
  return Tensor::FromData(std::move(shape), std::move(v), true);
}

void BM_MatMul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = Random({n, n}, rng);
  const Tensor b = Random({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_MatMul)->RangeMultiplier(2)->Range(16, 128);

void BM_MatMulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor a = Random({n, n}, rng);
  Tensor b = Random({n, n}, rng);
  for (auto _ : state) {
    a.ZeroGrad();
    b.ZeroGrad();
    Tape tape;
    Tape::Scope scope(tape);
    tape.Backward(Sum(MatMul(a, b)));
  }
}
BENCHMARK(BM_MatMulBackward)->RangeMultiplier(2)->Range(16, 128);

void BM_Softmax(benchmark::State& state) {
  Rng rng(3);
  const Tensor x = Random({64, static_cast<std::size_t>(state.range(0))}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Softmax(x, 1));
}
BENCHMARK(BM_Softmax)->Range(8, 512);

}  // namespace
}  // namespace dualscribe
