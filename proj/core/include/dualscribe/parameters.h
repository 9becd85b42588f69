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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualscribe/tensor.h"

namespace dualscribe {

class Rng;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Insertion-ordered registry of trainable tensors. The order is the
// iteration order of the optimizer and the checkpoint layout.
class ParameterStore {
 public:
  // Registers `value` under `name`, marks it trainable and returns the
  // shared handle. Throws InvalidArgument on duplicate names.
  Tensor Register(std::string name, Tensor value);

  const Tensor& Get(std::string_view name) const;
  bool Contains(std::string_view name) const;

  std::span<const NamedTensor> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t NumScalars() const;

  void ZeroGrad();

 private:
  std::vector<NamedTensor> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Glorot/Xavier uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor XavierUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor NormalTensor(Shape shape, double stddev, Rng& rng);

}  // namespace dualscribe
