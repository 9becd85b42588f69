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

// Memory-augmented encoder and meshed decoder.
//
// Encoder self-attention extends each head's keys and values with learned,
// input-independent memory rows:
//
//   K_h = [X W_k]_h ++ M_k[:, h]      V_h = [X W_v]_h ++ M_v[:, h]
//   A_h = softmax(Q_h K_h^T / sqrt(d_head))   over n + m slots
//
// The decoder's cross-attention reads every encoder layer's output and mixes
// them with elementwise sigmoid gates:
//
//   C_i     = Attn(Y, trace[i])
//   alpha_i = sigmoid([Y || C_i] W_i + b_i)
//   out     = (1 / sqrt(N)) * sum_i alpha_i * C_i
//
// All blocks are pre-norm residual: x + Sublayer(LayerNorm(x)).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualscribe/parameters.h"
#include "dualscribe/tensor.h"

namespace dualscribe {

class Rng;

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;

struct ModelConfig {
  std::size_t d_model = 512;
  std::size_t memory_slots = 40;  // per encoder layer
  std::size_t n_enc_layers = 3;
  std::size_t n_dec_layers = 3;
  std::size_t n_heads = 8;
  std::size_t ffn_dim = 2048;
  std::size_t vocab_size = 4;
  std::size_t max_len = 128;
  double dropout_rate = 0.1;

  // Throws InvalidArgument when an invariant is violated.
  void Validate() const;

  // d_model 16, m 3, 2 + 2 layers, 2 heads, ffn 32, V 11, no dropout.
  static ModelConfig Tiny();

  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct AttentionParams {
  Tensor w_q, w_k, w_v, w_o;  // each [d_model, d_model]
};

struct MemoryAttentionParams {
  AttentionParams attention;
  Tensor memory_keys;    // [m, d_model]; undefined when m == 0
  Tensor memory_values;  // [m, d_model]; undefined when m == 0
};

struct FeedForwardParams {
  Tensor w1, b1, w2, b2;
};

struct MeshGateParams {
  Tensor weight;  // [2 * d_model, d_model]
  Tensor bias;    // [d_model]
};

struct EncoderLayerParams {
  LayerNormParams attention_norm;
  MemoryAttentionParams attention;
  LayerNormParams ffn_norm;
  FeedForwardParams ffn;
};

struct DecoderLayerParams {
  LayerNormParams self_norm;
  AttentionParams self_attention;
  LayerNormParams cross_norm;
  AttentionParams cross_attention;
  std::vector<MeshGateParams> gates;  // one per encoder layer
  LayerNormParams ffn_norm;
  FeedForwardParams ffn;
};

struct TransformerParams {
  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
  Tensor token_embedding;  // [V, d_model]
  LayerNormParams final_norm;
  Tensor output_weight;  // [d_model, V]
  Tensor output_bias;    // [V]
};

// Xavier-uniform projections, N(0, 1/d_model) memory rows, zero gate and
// projection biases, unit layer-norm gains, N(0, 1) token embeddings and an
// N(0, kOutputInitStddev^2) vocabulary head.
inline constexpr double kOutputInitStddev = 0.02;
TransformerParams InitTransformer(const ModelConfig& config, Rng& rng,
                                  ParameterStore* store = nullptr,
                                  const std::string& prefix = "m2");

// Output of every encoder layer, first to last. Each entry is
// [B, n_regions, d_model].
using EncoderTrace = std::vector<Tensor>;

// Optional instrumentation of a forward pass.
struct ForwardObserver {
  // Attention weights per head: [B, queries, slots].
  std::function<void(std::string_view site, const Tensor& weights)> on_attention;
  // Mesh gate activations: [B, queries, d_model].
  std::function<void(std::size_t encoder_layer, const Tensor& gate)> on_gate;
};

struct ForwardOptions {
  // Dropout is applied only when training is set and dropout_rng is given.
  bool training = false;
  Rng* dropout_rng = nullptr;
  const ForwardObserver* observer = nullptr;
};

// Multi-head attention of queries [B, t, d] over keys_values [B, s, d].
// Memory tensors may be undefined. `mask` is empty or [t, s + m].
Tensor MultiHeadAttention(const Tensor& queries, const Tensor& keys_values,
                          const AttentionParams& params, std::size_t n_heads,
                          const Tensor& memory_keys, const Tensor& memory_values,
                          std::span<const std::uint8_t> mask = {},
                          const ForwardOptions& options = {},
                          std::string_view site = "attention");

// Memory-augmented self-attention core (no residual or norm). x is [n, d]
// or [B, n, d]; the result has the same shape.
Tensor MemorySelfAttention(const Tensor& x, const MemoryAttentionParams& params,
                           std::size_t n_heads,
                           const ForwardOptions& options = {});

// One pre-norm encoder block: x + MemAttn(LN(x)), then + FFN(LN(.)).
Tensor EncoderLayer(const Tensor& x, const EncoderLayerParams& params,
                    const ModelConfig& config, const ForwardOptions& options = {});

// regions is [n, d] or [B, n, d]. Throws InvalidArgument if n > max_len.
EncoderTrace Encode(const Tensor& regions, const ModelConfig& config,
                    const TransformerParams& params,
                    const ForwardOptions& options = {});

// Gated sum over encoder layers; y is the (normalized) query stream
// [B, t, d]. Throws InvalidArgument on an empty trace.
Tensor MeshedCrossAttention(const Tensor& y, const EncoderTrace& trace,
                            const DecoderLayerParams& params,
                            const ModelConfig& config,
                            const ForwardOptions& options = {});

struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> ids;  // row-major [batch, length]
};

// Teacher-forced decoder: logits [B, T, V] where position t depends only on
// tokens at positions <= t. Throws InvalidArgument when T > max_len or a
// token id is >= vocab_size.
Tensor DecodeForward(const TokenBatch& tokens, const EncoderTrace& trace,
                     const ModelConfig& config, const TransformerParams& params,
                     const ForwardOptions& options = {});

// Repeats a batch-1 trace `count` times along the batch axis.
EncoderTrace RepeatTrace(const EncoderTrace& trace, std::size_t count);

// [length, d] sinusoidal position table.
Tensor SinusoidalPositions(std::size_t length, std::size_t d_model);

// [T, T] lower-triangular mask (1 = visible).
std::vector<std::uint8_t> CausalMask(std::size_t length);

}  // namespace dualscribe
