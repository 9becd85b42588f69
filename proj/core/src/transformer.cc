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

#include "dualscribe/transformer.h"

#include <cmath>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

void ModelConfig::Validate() const {
  auto fail = [](const std::string& msg) {
    throw InvalidArgument("model config: " + msg);
  };
  if (d_model == 0) fail("d_model must be positive");
  if (n_heads == 0 || d_model % n_heads != 0) {
    fail("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
         std::to_string(n_heads) + ")");
  }
  if (n_enc_layers == 0) fail("n_enc_layers must be positive");
  if (n_dec_layers == 0) fail("n_dec_layers must be positive");
  if (ffn_dim == 0) fail("ffn_dim must be positive");
  if (vocab_size < 4) fail("vocab_size must be >= 4 (pad/bos/eos/unk)");
  if (max_len == 0) fail("max_len must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
}

ModelConfig ModelConfig::Tiny() {
  ModelConfig c;
  c.d_model = 16;
  c.memory_slots = 3;
  c.n_enc_layers = 2;
  c.n_dec_layers = 2;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.vocab_size = 11;
  c.max_len = 64;
  c.dropout_rate = 0.0;
  return c;
}

namespace {

Tensor Register(ParameterStore* store, const std::string& name, Tensor t) {
  if (store != nullptr) return store->Register(name, std::move(t));
  t.set_requires_grad(true);
  return t;
}

LayerNormParams InitNorm(std::size_t d, ParameterStore* store,
                         const std::string& name) {
  return {Register(store, name + ".gain", Tensor::Full({d}, 1.0)),
          Register(store, name + ".bias", Tensor::Zeros({d}))};
}

AttentionParams InitAttention(std::size_t d, Rng& rng, ParameterStore* store,
                              const std::string& name) {
  AttentionParams p;
  p.w_q = Register(store, name + ".w_q", XavierUniform(d, d, rng));
  p.w_k = Register(store, name + ".w_k", XavierUniform(d, d, rng));
  p.w_v = Register(store, name + ".w_v", XavierUniform(d, d, rng));
  p.w_o = Register(store, name + ".w_o", XavierUniform(d, d, rng));
  return p;
}

FeedForwardParams InitFfn(std::size_t d, std::size_t hidden, Rng& rng,
                          ParameterStore* store, const std::string& name) {
  FeedForwardParams p;
  p.w1 = Register(store, name + ".w1", XavierUniform(d, hidden, rng));
  p.b1 = Register(store, name + ".b1", Tensor::Zeros({hidden}));
  p.w2 = Register(store, name + ".w2", XavierUniform(hidden, d, rng));
  p.b2 = Register(store, name + ".b2", Tensor::Zeros({d}));
  return p;
}

Tensor MaybeDropout(const Tensor& x, double rate, const ForwardOptions& opt) {
  if (!opt.training || opt.dropout_rng == nullptr || rate == 0.0) return x;
  return Dropout(x, rate, *opt.dropout_rng);
}

Tensor FeedForward(const Tensor& x, const FeedForwardParams& p) {
  return Linear(Gelu(Linear(x, p.w1, p.b1)), p.w2, p.b2);
}

Tensor Norm(const Tensor& x, const LayerNormParams& p) {
  return LayerNorm(x, p.gain, p.bias);
}

// Lifts [n, d] to [1, n, d]; returns whether it did.
bool LiftToBatch(Tensor& x) {
  if (x.rank() == 2) {
    x = Reshape(x, {1, x.dim(0), x.dim(1)});
    return true;
  }
  if (x.rank() != 3) {
    throw ShapeError("expected [n, d] or [B, n, d], got " + ShapeToString(x.shape()));
  }
  return false;
}

}  // namespace

TransformerParams InitTransformer(const ModelConfig& config, Rng& rng,
                                  ParameterStore* store,
                                  const std::string& prefix) {
  config.Validate();
  const std::size_t d = config.d_model;
  TransformerParams p;
  for (std::size_t l = 0; l < config.n_enc_layers; ++l) {
    const std::string name = prefix + ".encoder." + std::to_string(l);
    EncoderLayerParams layer;
    layer.attention_norm = InitNorm(d, store, name + ".attention_norm");
    layer.attention.attention = InitAttention(d, rng, store, name + ".attention");
    if (config.memory_slots > 0) {
      const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
      layer.attention.memory_keys =
          Register(store, name + ".attention.memory_keys",
                   NormalTensor({config.memory_slots, d}, stddev, rng));
      layer.attention.memory_values =
          Register(store, name + ".attention.memory_values",
                   NormalTensor({config.memory_slots, d}, stddev, rng));
    }
    layer.ffn_norm = InitNorm(d, store, name + ".ffn_norm");
    layer.ffn = InitFfn(d, config.ffn_dim, rng, store, name + ".ffn");
    p.encoder.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < config.n_dec_layers; ++l) {
    const std::string name = prefix + ".decoder." + std::to_string(l);
    DecoderLayerParams layer;
    layer.self_norm = InitNorm(d, store, name + ".self_norm");
    layer.self_attention = InitAttention(d, rng, store, name + ".self_attention");
    layer.cross_norm = InitNorm(d, store, name + ".cross_norm");
    layer.cross_attention = InitAttention(d, rng, store, name + ".cross_attention");
    for (std::size_t i = 0; i < config.n_enc_layers; ++i) {
      const std::string gate = name + ".gate." + std::to_string(i);
      layer.gates.push_back(
          {Register(store, gate + ".weight", XavierUniform(2 * d, d, rng)),
           Register(store, gate + ".bias", Tensor::Zeros({d}))});
    }
    layer.ffn_norm = InitNorm(d, store, name + ".ffn_norm");
    layer.ffn = InitFfn(d, config.ffn_dim, rng, store, name + ".ffn");
    p.decoder.push_back(std::move(layer));
  }
  p.token_embedding = Register(store, prefix + ".token_embedding",
                               NormalTensor({config.vocab_size, d}, 1.0, rng));
  p.final_norm = InitNorm(d, store, prefix + ".final_norm");
  // Small vocabulary head so initial predictions are close to uniform.
  p.output_weight = Register(store, prefix + ".output.weight",
                             NormalTensor({d, config.vocab_size}, kOutputInitStddev, rng));
  p.output_bias = Register(store, prefix + ".output.bias",
                           Tensor::Zeros({config.vocab_size}));
  return p;
}

Tensor MultiHeadAttention(const Tensor& queries, const Tensor& keys_values,
                          const AttentionParams& params, std::size_t n_heads,
                          const Tensor& memory_keys, const Tensor& memory_values,
                          std::span<const std::uint8_t> mask,
                          const ForwardOptions& options, std::string_view site) {
  if (queries.rank() != 3 || keys_values.rank() != 3 ||
      queries.dim(0) != keys_values.dim(0) || queries.dim(2) != keys_values.dim(2)) {
    throw ShapeError("attention: queries " + ShapeToString(queries.shape()) +
                     " incompatible with keys " + ShapeToString(keys_values.shape()));
  }
  const std::size_t batch = queries.dim(0);
  const std::size_t d = queries.dim(2);
  if (n_heads == 0 || d % n_heads != 0) {
    throw InvalidArgument("attention: d_model not divisible by head count");
  }
  const bool has_memory = memory_keys.defined();
  if (has_memory != memory_values.defined()) {
    throw InvalidArgument("attention: memory keys and values must both be set");
  }
  if (has_memory && (memory_keys.rank() != 2 || memory_keys.dim(1) != d ||
                     memory_values.shape() != memory_keys.shape())) {
    throw ShapeError("attention: memory must be [m, d_model], got " +
                     ShapeToString(memory_keys.shape()));
  }
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Tensor q = MatMul(queries, params.w_q);
  const Tensor k = MatMul(keys_values, params.w_k);
  const Tensor v = MatMul(keys_values, params.w_v);

  std::vector<Tensor> contexts;
  contexts.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Tensor qh = Slice(q, 2, h * dh, dh);
    Tensor kh = Slice(k, 2, h * dh, dh);
    Tensor vh = Slice(v, 2, h * dh, dh);
    if (has_memory) {
      kh = Concat({kh, Expand(Slice(memory_keys, 1, h * dh, dh), batch)}, 1);
      vh = Concat({vh, Expand(Slice(memory_values, 1, h * dh, dh), batch)}, 1);
    }
    const Tensor scores = Scale(MatMul(qh, TransposeLast2(kh)), scale);
    const Tensor weights = mask.empty() ? Softmax(scores, 2) : MaskedSoftmax(scores, mask);
    if (options.observer != nullptr && options.observer->on_attention) {
      options.observer->on_attention(site, weights);
    }
    contexts.push_back(MatMul(weights, vh));
  }
  const Tensor merged = n_heads == 1 ? contexts[0] : Concat(contexts, 2);
  return MatMul(merged, params.w_o);
}

Tensor MemorySelfAttention(const Tensor& x, const MemoryAttentionParams& params,
                           std::size_t n_heads, const ForwardOptions& options) {
  Tensor in = x;
  const bool lifted = LiftToBatch(in);
  Tensor out = MultiHeadAttention(in, in, params.attention, n_heads,
                                  params.memory_keys, params.memory_values, {},
                                  options, "encoder.memory_attention");
  return lifted ? Reshape(out, {out.dim(1), out.dim(2)}) : out;
}

Tensor EncoderLayer(const Tensor& x, const EncoderLayerParams& params,
                    const ModelConfig& config, const ForwardOptions& options) {
  Tensor h = MemorySelfAttention(Norm(x, params.attention_norm), params.attention,
                                 config.n_heads, options);
  Tensor y = Add(x, MaybeDropout(h, config.dropout_rate, options));
  Tensor f = FeedForward(Norm(y, params.ffn_norm), params.ffn);
  return Add(y, MaybeDropout(f, config.dropout_rate, options));
}

EncoderTrace Encode(const Tensor& regions, const ModelConfig& config,
                    const TransformerParams& params, const ForwardOptions& options) {
  Tensor x = regions;
  LiftToBatch(x);
  if (x.dim(2) != config.d_model) {
    throw ShapeError("encode: regions " + ShapeToString(regions.shape()) +
                     " do not match d_model " + std::to_string(config.d_model));
  }
  if (x.dim(1) > config.max_len) {
    throw InvalidArgument("encode: " + std::to_string(x.dim(1)) +
                          " regions exceed max_len " + std::to_string(config.max_len));
  }
  if (params.encoder.size() != config.n_enc_layers) {
    throw InvalidArgument("encode: parameter layer count does not match config");
  }
  EncoderTrace trace;
  trace.reserve(params.encoder.size());
  for (const auto& layer : params.encoder) {
    x = EncoderLayer(x, layer, config, options);
    trace.push_back(x);
  }
  return trace;
}

Tensor MeshedCrossAttention(const Tensor& y, const EncoderTrace& trace,
                            const DecoderLayerParams& params,
                            const ModelConfig& config, const ForwardOptions& options) {
  if (trace.empty()) throw InvalidArgument("meshed attention: empty encoder trace");
  if (params.gates.size() != trace.size()) {
    throw InvalidArgument("meshed attention: " + std::to_string(params.gates.size()) +
                          " gates for " + std::to_string(trace.size()) +
                          " encoder layers");
  }
  Tensor total;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Tensor c = MultiHeadAttention(y, trace[i], params.cross_attention,
                                        config.n_heads, Tensor(), Tensor(), {},
                                        options, "decoder.cross_attention");
    const Tensor gate =
        Sigmoid(Linear(Concat({y, c}, 2), params.gates[i].weight, params.gates[i].bias));
    if (options.observer != nullptr && options.observer->on_gate) {
      options.observer->on_gate(i, gate);
    }
    const Tensor term = Mul(gate, c);
    total = total.defined() ? Add(total, term) : term;
  }
  return Scale(total, 1.0 / std::sqrt(static_cast<double>(trace.size())));
}

Tensor DecodeForward(const TokenBatch& tokens, const EncoderTrace& trace,
                     const ModelConfig& config, const TransformerParams& params,
                     const ForwardOptions& options) {
  if (tokens.batch == 0 || tokens.length == 0 ||
      tokens.ids.size() != tokens.batch * tokens.length) {
    throw InvalidArgument("decode: malformed token batch");
  }
  if (tokens.length > config.max_len) {
    throw InvalidArgument("decode: sequence length " + std::to_string(tokens.length) +
                          " exceeds max_len " + std::to_string(config.max_len));
  }
  for (int id : tokens.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw InvalidArgument("decode: token id " + std::to_string(id) +
                            " out of range for vocabulary of " +
                            std::to_string(config.vocab_size));
    }
  }
  if (trace.empty() || trace[0].rank() != 3 || trace[0].dim(0) != tokens.batch) {
    throw ShapeError("decode: encoder trace batch does not match token batch");
  }
  const std::size_t b = tokens.batch;
  const std::size_t t = tokens.length;
  Tensor y = EmbeddingLookup(params.token_embedding, tokens.ids, {b, t});
  y = Add(y, Expand(SinusoidalPositions(t, config.d_model), b));
  y = MaybeDropout(y, config.dropout_rate, options);

  const std::vector<std::uint8_t> mask = CausalMask(t);
  for (const auto& layer : params.decoder) {
    const Tensor hs = Norm(y, layer.self_norm);
    const Tensor s = MultiHeadAttention(hs, hs, layer.self_attention, config.n_heads,
                                        Tensor(), Tensor(), mask, options,
                                        "decoder.self_attention");
    y = Add(y, MaybeDropout(s, config.dropout_rate, options));
    const Tensor c = MeshedCrossAttention(Norm(y, layer.cross_norm), trace, layer,
                                          config, options);
    y = Add(y, MaybeDropout(c, config.dropout_rate, options));
    const Tensor f = FeedForward(Norm(y, layer.ffn_norm), layer.ffn);
    y = Add(y, MaybeDropout(f, config.dropout_rate, options));
  }
  return Linear(Norm(y, params.final_norm), params.output_weight, params.output_bias);
}

EncoderTrace RepeatTrace(const EncoderTrace& trace, std::size_t count) {
  EncoderTrace out;
  out.reserve(trace.size());
  for (const Tensor& layer : trace) {
    if (layer.rank() != 3 || layer.dim(0) != 1) {
      throw ShapeError("RepeatTrace expects batch-1 layers, got " +
                       ShapeToString(layer.shape()));
    }
    out.push_back(count == 1 ? layer
                             : Expand(Reshape(layer, {layer.dim(1), layer.dim(2)}), count));
  }
  return out;
}

Tensor SinusoidalPositions(std::size_t length, std::size_t d_model) {
  std::vector<double> table(length * d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::FromData({length, d_model}, std::move(table));
}

std::vector<std::uint8_t> CausalMask(std::size_t length) {
  std::vector<std::uint8_t> mask(length * length, 0);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask[i * length + j] = 1;
  }
  return mask;
}

}  // namespace dualscribe
