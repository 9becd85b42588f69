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

#include "dualscribe/parameters.h"

#include <cmath>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

Tensor ParameterStore::Register(std::string name, Tensor value) {
  if (!value.defined()) {
    throw InvalidArgument("parameter '" + name + "' is undefined");
  }
  if (index_.contains(name)) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  value.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), value});
  return value;
}

const Tensor& ParameterStore::Get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
  }
  return entries_[it->second].tensor;
}

bool ParameterStore::Contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParameterStore::NumScalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& e : entries_) e.tensor.ZeroGrad();
}

Tensor XavierUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = rng.Uniform(-a, a);
  return Tensor::FromData({fan_in, fan_out}, std::move(values));
}

Tensor NormalTensor(Shape shape, double stddev, Rng& rng) {
  std::vector<double> values(NumElements(shape));
  for (double& v : values) v = rng.Normal(0.0, stddev);
  return Tensor::FromData(std::move(shape), std::move(values));
}

}  // namespace dualscribe
