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

// Model checkpoint container:
//
//   "M2CK" | version u32 |
//   config: d_model, memory_slots, n_enc_layers, n_dec_layers, n_heads,
//           ffn_dim, vocab_size, max_len (u32 each), dropout_rate f64 |
//   count u32 | count x { name | rank u32 | dims u32 x rank | f64 values }
//
// Strings are u32-length-prefixed UTF-8; all numbers little-endian.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dualscribe/parameters.h"
#include "dualscribe/transformer.h"

namespace dualscribe {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::vector<NamedTensor> parameters;
};

void SaveCheckpoint(const std::filesystem::path& path, const ModelConfig& config,
                    const ParameterStore& parameters);

// Throws DataError on I/O failure or a malformed file.
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

// Copies checkpoint values into `parameters`. Throws DataError when the
// stored config differs from `expected`, or when any parameter is missing,
// unexpected, or has a different shape.
void LoadCheckpoint(const std::filesystem::path& path, const ModelConfig& expected,
                    ParameterStore& parameters);

}  // namespace dualscribe
