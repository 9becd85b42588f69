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

#include "dualscribe/checkpoint.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "dualscribe/binary_io.h"
#include "dualscribe/errors.h"

namespace dualscribe {

namespace {

constexpr char kMagic[4] = {'M', '2', 'C', 'K'};

void WriteConfig(std::ostream& out, const ModelConfig& c) {
  for (std::size_t v : {c.d_model, c.memory_slots, c.n_enc_layers, c.n_dec_layers,
                        c.n_heads, c.ffn_dim, c.vocab_size, c.max_len}) {
    binary::WriteU32(out, static_cast<std::uint32_t>(v));
  }
  binary::WriteF64(out, c.dropout_rate);
}

ModelConfig ReadConfig(std::istream& in) {
  ModelConfig c;
  for (std::size_t* field : {&c.d_model, &c.memory_slots, &c.n_enc_layers,
                             &c.n_dec_layers, &c.n_heads, &c.ffn_dim, &c.vocab_size,
                             &c.max_len}) {
    *field = binary::ReadU32(in, "model config");
  }
  c.dropout_rate = binary::ReadF64(in, "model config");
  return c;
}

std::string Describe(const ModelConfig& c) {
  return "d_model=" + std::to_string(c.d_model) + " m=" + std::to_string(c.memory_slots) +
         " layers=" + std::to_string(c.n_enc_layers) + "+" + std::to_string(c.n_dec_layers) +
         " heads=" + std::to_string(c.n_heads) + " ffn=" + std::to_string(c.ffn_dim) +
         " vocab=" + std::to_string(c.vocab_size) + " max_len=" + std::to_string(c.max_len);
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const ModelConfig& config,
                    const ParameterStore& parameters) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  binary::WriteU32(out, kCheckpointVersion);
  WriteConfig(out, config);
  binary::WriteU32(out, static_cast<std::uint32_t>(parameters.size()));
  for (const auto& [name, tensor] : parameters.entries()) {
    binary::WriteString(out, name);
    binary::WriteU32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) binary::WriteU32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.data()) binary::WriteF64(out, v);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  binary::ReadExact(in, magic, 4, "checkpoint magic");
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw DataError(path.string() + " is not an M2CK checkpoint");
  }
  const std::uint32_t version = binary::ReadU32(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = ReadConfig(in);
  const std::uint32_t count = binary::ReadU32(in, "parameter count");
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binary::ReadString(in, "parameter name");
    if (!seen.insert(name).second) {
      throw DataError("duplicate parameter '" + name + "' in checkpoint");
    }
    const std::uint32_t rank = binary::ReadU32(in, "parameter rank");
    if (rank > 8) throw DataError("implausible rank for parameter '" + name + "'");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = binary::ReadU32(in, "parameter shape");
      if (d == 0) throw DataError("zero dimension in parameter '" + name + "'");
      n *= d;
    }
    std::vector<double> values(n);
    for (double& v : values) v = binary::ReadF64(in, "parameter values");
    ckpt.parameters.push_back({std::move(name), Tensor::FromData(shape, std::move(values))});
  }
  return ckpt;
}

void LoadCheckpoint(const std::filesystem::path& path, const ModelConfig& expected,
                    ParameterStore& parameters) {
  Checkpoint ckpt = ReadCheckpoint(path);
  if (!(ckpt.config == expected)) {
    throw DataError("checkpoint config (" + Describe(ckpt.config) +
                    ") does not match model config (" + Describe(expected) + ")");
  }
  if (ckpt.parameters.size() != parameters.size()) {
    throw DataError("checkpoint holds " + std::to_string(ckpt.parameters.size()) +
                    " parameters, model expects " + std::to_string(parameters.size()));
  }
  // Validate everything before mutating anything.
  for (const auto& [name, stored] : ckpt.parameters) {
    if (!parameters.Contains(name)) {
      throw DataError("checkpoint parameter '" + name + "' is not part of the model");
    }
    const Tensor& target = parameters.Get(name);
    if (target.shape() != stored.shape()) {
      throw DataError("parameter '" + name + "' has shape " +
                      ShapeToString(stored.shape()) + " in checkpoint, model expects " +
                      ShapeToString(target.shape()));
    }
  }
  for (const auto& [name, stored] : ckpt.parameters) {
    Tensor target = parameters.Get(name);
    std::ranges::copy(stored.data(), target.mutable_data().begin());
  }
}

}  // namespace dualscribe
