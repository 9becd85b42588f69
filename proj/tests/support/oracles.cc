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

#include "support/oracles.h"

#include <algorithm>
#include <sstream>
#include <cmath>
#include <map>

#include "dualscribe/errors.h"

namespace dualscribe::oracle {

std::vector<double> TripleLoopMatMul(std::span<const double> a, std::span<const double> b,
                                     std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::size_t p = 0; p < k; ++p) acc += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(acc);
    }
  }
  return c;
}

std::vector<double> ExtendedSoftmax(std::span<const double> x) {
  long double mx = x[0];
  for (double v : x) mx = std::max<long double>(mx, v);
  std::vector<long double> e(x.size());
  long double z = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(static_cast<long double>(x[i]) - mx);
    z += e[i];
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(e[i] / z);
  return out;
}

double DirectNll(std::span<const double> logits, std::span<const int> targets,
                 std::span<const std::uint8_t> pad_mask, std::size_t positions,
                 std::size_t vocab) {
  long double total = 0.0L;
  std::size_t count = 0;
  for (std::size_t p = 0; p < positions; ++p) {
    if (pad_mask[p] != 0) continue;
    long double z = 0.0L;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(static_cast<long double>(logits[p * vocab + v]));
    total += std::log(z) - logits[p * vocab + static_cast<std::size_t>(targets[p])];
    ++count;
  }
  return count == 0 ? 0.0 : static_cast<double>(total / count);
}

GradCheck CheckGradients(const std::function<Tensor()>& loss_fn,
                         std::span<const NamedTensor> params, double eps, double floor) {
  std::vector<std::vector<double>> analytic;
  {
    for (const auto& p : params) {
      Tensor t = p.tensor;
      t.ZeroGrad();
    }
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor loss = loss_fn();
    tape.Backward(loss);
    for (const auto& p : params) {
      if (p.tensor.has_grad()) {
        analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
      } else {
        analytic.emplace_back(p.tensor.size(), 0.0);
      }
    }
  }
  GradCheck result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    auto data = t.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double saved = data[j];
      data[j] = saved + eps;
      const double up = loss_fn().item();
      data[j] = saved - eps;
      const double down = loss_fn().item();
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i][j];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        std::ostringstream os;
        os << params[i].name << '[' << j << "] analytic " << a << " numeric " << numeric;
        result.worst = os.str();
      }
    }
  }
  return result;
}

Matrix ToMatrix(const Tensor& t) {
  Matrix m;
  if (t.rank() == 2) {
    m.rows = t.dim(0);
    m.cols = t.dim(1);
  } else if (t.rank() == 3 && t.dim(0) == 1) {
    m.rows = t.dim(1);
    m.cols = t.dim(2);
  } else {
    throw InvalidArgument("ToMatrix: unsupported shape " + ShapeToString(t.shape()));
  }
  m.v.assign(t.data().begin(), t.data().end());
  return m;
}

namespace {

Matrix Multiply(const Matrix& a, const Tensor& w) {
  Matrix out{a.rows, w.dim(1), {}};
  out.v = TripleLoopMatMul(a.v, w.data(), a.rows, a.cols, w.dim(1));
  return out;
}

Matrix Plus(Matrix a, const Matrix& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

Matrix LoopFfn(const Matrix& x, const FeedForwardParams& p) {
  Matrix h = Multiply(x, p.w1);
  for (std::size_t r = 0; r < h.rows; ++r) {
    for (std::size_t c = 0; c < h.cols; ++c) {
      const double z = h(r, c) + p.b1.data()[c];
      h(r, c) = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    }
  }
  Matrix o = Multiply(h, p.w2);
  for (std::size_t r = 0; r < o.rows; ++r) {
    for (std::size_t c = 0; c < o.cols; ++c) o(r, c) += p.b2.data()[c];
  }
  return o;
}

}  // namespace

Matrix LoopLayerNorm(const Matrix& x, const Tensor& gain, const Tensor& bias) {
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r) {
    long double mean = 0.0L;
    for (std::size_t c = 0; c < x.cols; ++c) mean += x(r, c);
    mean /= x.cols;
    long double var = 0.0L;
    for (std::size_t c = 0; c < x.cols; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= x.cols;
    const long double inv = 1.0L / std::sqrt(var + static_cast<long double>(kLayerNormEpsilon));
    for (std::size_t c = 0; c < x.cols; ++c) {
      out(r, c) = static_cast<double>((x(r, c) - mean) * inv * gain.data()[c] + bias.data()[c]);
    }
  }
  return out;
}

Matrix LoopAttention(const Matrix& q_in, const Matrix& kv_in, const AttentionParams& p,
                     std::size_t heads, const Tensor& mem_k, const Tensor& mem_v,
                     bool causal) {
  const std::size_t d = q_in.cols;
  const std::size_t dh = d / heads;
  const Matrix q = Multiply(q_in, p.w_q);
  Matrix k = Multiply(kv_in, p.w_k);
  Matrix v = Multiply(kv_in, p.w_v);
  const std::size_t n = kv_in.rows;
  const std::size_t m = mem_k.defined() ? mem_k.dim(0) : 0;
  // Append memory rows below the projected keys/values.
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      k.v.push_back(mem_k.data()[r * d + c]);
      v.v.push_back(mem_v.data()[r * d + c]);
    }
  }
  k.rows = v.rows = n + m;
  Matrix context{q.rows, d, std::vector<double>(q.rows * d, 0.0)};
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < q.rows; ++i) {
      std::vector<double> scores;
      std::vector<std::size_t> slots;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (causal && j < n && j > i) continue;
        long double s = 0.0L;
        for (std::size_t c = 0; c < dh; ++c) s += static_cast<long double>(q(i, h * dh + c)) * k(j, h * dh + c);
        scores.push_back(static_cast<double>(s / std::sqrt(static_cast<long double>(dh))));
        slots.push_back(j);
      }
      const auto w = ExtendedSoftmax(scores);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        for (std::size_t c = 0; c < dh; ++c) context(i, h * dh + c) += w[s] * v(slots[s], h * dh + c);
      }
    }
  }
  return Multiply(context, p.w_o);
}

Matrix LoopEncoderLayer(const Matrix& x, const EncoderLayerParams& p, std::size_t heads) {
  const Matrix a = LoopLayerNorm(x, p.attention_norm.gain, p.attention_norm.bias);
  const Matrix y = Plus(x, LoopAttention(a, a, p.attention.attention, heads, p.attention.memory_keys,
                                         p.attention.memory_values, false));
  return Plus(y, LoopFfn(LoopLayerNorm(y, p.ffn_norm.gain, p.ffn_norm.bias), p.ffn));
}

Tensor VanillaAttention(const Tensor& q_in, const Tensor& kv_in, const AttentionParams& p,
                        std::size_t heads, std::span<const std::uint8_t> mask) {
  const std::size_t d = q_in.dim(2);
  const std::size_t dh = d / heads;
  const Tensor q = MatMul(q_in, p.w_q);
  const Tensor k = MatMul(kv_in, p.w_k);
  const Tensor v = MatMul(kv_in, p.w_v);
  std::vector<Tensor> heads_out;
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor s = Scale(MatMul(Slice(q, 2, h * dh, dh), TransposeLast2(Slice(k, 2, h * dh, dh))),
                           1.0 / std::sqrt(static_cast<double>(dh)));
    const Tensor a = mask.empty() ? Softmax(s, 2) : MaskedSoftmax(s, mask);
    heads_out.push_back(MatMul(a, Slice(v, 2, h * dh, dh)));
  }
  return MatMul(heads == 1 ? heads_out[0] : Concat(heads_out, 2), p.w_o);
}

namespace {

Tensor VanillaFfn(const Tensor& x, const FeedForwardParams& p) {
  return Linear(Gelu(Linear(x, p.w1, p.b1)), p.w2, p.b2);
}

}  // namespace

Tensor VanillaEncoder(const Tensor& x, const ModelConfig& config, const TransformerParams& p) {
  Tensor h = x.rank() == 2 ? Reshape(x, {1, x.dim(0), x.dim(1)}) : x;
  for (const auto& layer : p.encoder) {
    const Tensor a = LayerNorm(h, layer.attention_norm.gain, layer.attention_norm.bias);
    h = Add(h, VanillaAttention(a, a, layer.attention.attention, config.n_heads, {}));
    h = Add(h, VanillaFfn(LayerNorm(h, layer.ffn_norm.gain, layer.ffn_norm.bias), layer.ffn));
  }
  return h;
}

Tensor VanillaDecoderLogits(const TokenBatch& tokens, const Tensor& memory,
                            const ModelConfig& config, const TransformerParams& p,
                            double cross_scale) {
  const std::size_t b = tokens.batch, t = tokens.length;
  Tensor y = Add(EmbeddingLookup(p.token_embedding, tokens.ids, {b, t}),
                 Expand(SinusoidalPositions(t, config.d_model), b));
  const auto mask = CausalMask(t);
  for (const auto& layer : p.decoder) {
    const Tensor s = LayerNorm(y, layer.self_norm.gain, layer.self_norm.bias);
    y = Add(y, VanillaAttention(s, s, layer.self_attention, config.n_heads, mask));
    const Tensor c = LayerNorm(y, layer.cross_norm.gain, layer.cross_norm.bias);
    y = Add(y, Scale(VanillaAttention(c, memory, layer.cross_attention, config.n_heads, {}),
                     cross_scale));
    y = Add(y, VanillaFfn(LayerNorm(y, layer.ffn_norm.gain, layer.ffn_norm.bias), layer.ffn));
  }
  return Linear(LayerNorm(y, p.final_norm.gain, p.final_norm.bias), p.output_weight,
                p.output_bias);
}

namespace {

using Gram = std::vector<std::string>;

std::vector<Gram> Grams(const Tokens& t, std::size_t n) {
  std::vector<Gram> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

std::size_t Occurrences(const std::vector<Gram>& list, const Gram& g) {
  return static_cast<std::size_t>(std::count(list.begin(), list.end(), g));
}

std::vector<Gram> Distinct(std::vector<Gram> list) {
  std::vector<Gram> out;
  for (auto& g : list) {
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

std::vector<double> BruteBleu(std::span<const EvalPair> pairs, std::size_t max_n) {
  std::vector<double> num(max_n, 0.0), den(max_n, 0.0);
  double c = 0.0, r = 0.0;
  for (const auto& pair : pairs) {
    c += static_cast<double>(pair.candidate.size());
    // Closest reference length, shorter on ties.
    std::vector<std::size_t> lens;
    for (const auto& ref : pair.references) lens.push_back(ref.size());
    std::sort(lens.begin(), lens.end());
    std::size_t best = lens[0];
    for (std::size_t L : lens) {
      const auto dist = [&](std::size_t x) {
        return x > pair.candidate.size() ? x - pair.candidate.size() : pair.candidate.size() - x;
      };
      if (dist(L) < dist(best)) best = L;
    }
    r += static_cast<double>(best);
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto cand = Grams(pair.candidate, n);
      den[n - 1] += static_cast<double>(cand.size());
      for (const auto& g : Distinct(cand)) {
        std::size_t max_ref = 0;
        for (const auto& ref : pair.references) max_ref = std::max(max_ref, Occurrences(Grams(ref, n), g));
        num[n - 1] += static_cast<double>(std::min(Occurrences(cand, g), max_ref));
      }
    }
  }
  const double bp = c == 0.0 ? 0.0 : (c > r ? 1.0 : std::exp(1.0 - r / c));
  std::vector<double> scores;
  for (std::size_t k = 1; k <= max_n; ++k) {
    double log_sum = 0.0;
    bool zero = false;
    for (std::size_t n = 0; n < k; ++n) {
      const double p = den[n] == 0.0 ? 0.0 : num[n] / den[n];
      if (p == 0.0) zero = true;
      else log_sum += std::log(p);
    }
    scores.push_back(zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(k)));
  }
  return scores;
}

namespace {

std::size_t LcsTable(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

}  // namespace

double BruteRougeL(std::span<const EvalPair> pairs) {
  if (pairs.empty()) return 0.0;
  long double total = 0.0L;
  for (const auto& pair : pairs) {
    double best = 0.0;
    for (const auto& ref : pair.references) {
      const double lcs = static_cast<double>(LcsTable(pair.candidate, ref));
      if (lcs == 0.0) continue;
      const double prec = lcs / static_cast<double>(pair.candidate.size());
      const double rec = lcs / static_cast<double>(ref.size());
      const double beta = 1.2;
      best = std::max(best, ((1 + beta * beta) * rec * prec) / (rec + beta * beta * prec));
    }
    total += best;
  }
  return static_cast<double>(total / pairs.size());
}

double BruteCiderD(std::span<const EvalPair> pairs) {
  if (pairs.empty()) return 0.0;
  const double n_docs = static_cast<double>(pairs.size());
  auto df = [&](const Gram& g) {
    std::size_t count = 0;
    for (const auto& pair : pairs) {
      bool found = false;
      for (const auto& ref : pair.references) found = found || Occurrences(Grams(ref, g.size()), g) > 0;
      count += found ? 1 : 0;
    }
    return static_cast<double>(count);
  };
  auto weights = [&](const Tokens& t, std::size_t n) {
    std::map<Gram, double> w;
    const auto grams = Grams(t, n);
    for (const auto& g : Distinct(grams)) {
      w[g] = static_cast<double>(Occurrences(grams, g)) * (std::log(n_docs) - std::log(std::max(1.0, df(g))));
    }
    return w;
  };
  auto norm = [](const std::map<Gram, double>& w) {
    double s = 0.0;
    for (const auto& [g, x] : w) s += x * x;
    return std::sqrt(s);
  };
  long double total = 0.0L;
  for (const auto& pair : pairs) {
    double per_n_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto wc = weights(pair.candidate, n);
      double over_refs = 0.0;
      for (const auto& ref : pair.references) {
        const auto wr = weights(ref, n);
        double dot = 0.0;
        for (const auto& [g, x] : wc) {
          auto it = wr.find(g);
          if (it != wr.end()) dot += std::min(x, it->second) * it->second;
        }
        const double nc = norm(wc), nr = norm(wr);
        if (nc != 0.0 && nr != 0.0) dot /= nc * nr;
        const double delta = static_cast<double>(pair.candidate.size()) - static_cast<double>(ref.size());
        over_refs += dot * std::exp(-delta * delta / (2.0 * 36.0));
      }
      per_n_sum += over_refs / static_cast<double>(pair.references.size());
    }
    total += per_n_sum / 4.0 * 10.0;
  }
  return static_cast<double>(total / pairs.size());
}

}  // namespace dualscribe::oracle
