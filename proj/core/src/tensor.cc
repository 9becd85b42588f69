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

#include "dualscribe/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

struct TensorAccess {
  static detail::TensorNode& node(const Tensor& t) { return *t.node_; }
  static Tensor Make(Shape shape, std::vector<double> data) {
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    return Tensor(std::move(node));
  }
};

namespace {

thread_local Tape* g_active_tape = nullptr;
std::atomic<bool> g_checked_mode{false};

detail::TensorNode& NodeOf(const Tensor& t) { return TensorAccess::node(t); }

void RequireDefined(const Tensor& t, std::string_view op) {
  if (!t.defined()) {
    throw InvalidArgument(std::string(op) + ": undefined tensor argument");
  }
}

[[noreturn]] void ThrowShape(std::string_view op, const Shape& a,
                             const Shape& b, std::string_view what) {
  std::ostringstream os;
  os << op << ": " << what << " (" << ShapeToString(a) << " vs "
     << ShapeToString(b) << ")";
  throw ShapeError(os.str());
}

void CheckFinite(std::span<const double> values, std::string_view op,
                 std::string_view what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvariantError(std::string(op) + ": non-finite " +
                           std::string(what));
    }
  }
}

// Returns the tape to record on, or nullptr when the op is not
// differentiable in the current context.
Tape* RecordingTape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::Active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

Tape* RecordingTape(std::span<const Tensor> inputs) {
  Tape* tape = Tape::Active();
  if (tape == nullptr) return nullptr;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return tape;
  }
  return nullptr;
}

Tensor NewOutput(std::string_view op, Shape shape, std::vector<double> data) {
  if (g_checked_mode.load(std::memory_order_relaxed)) {
    CheckFinite(data, op, "output");
  }
  return TensorAccess::Make(std::move(shape), std::move(data));
}

void MarkRecorded(const Tensor& out) {
  auto& node = NodeOf(out);
  node.requires_grad = true;
  node.is_leaf = false;
}

// Gradient buffer of an input, or an empty span when the input does not
// take gradients.
std::span<double> GradOf(const Tensor& t) {
  if (!t.defined() || !t.requires_grad()) return {};
  return const_cast<Tensor&>(t).mutable_grad();
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.axis = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void RequireSameShape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) ThrowShape(op, a.shape(), b.shape(), "shape mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = NumElements(shape);
  return FromData(std::move(shape), std::vector<double>(n, value),
                  requires_grad);
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data,
                        bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw ShapeError("tensor dimensions must be positive, got " +
                       ShapeToString(shape));
    }
  }
  if (NumElements(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + ShapeToString(shape));
  }
  Tensor t = TensorAccess::Make(std::move(shape), std::move(data));
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromData({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  RequireDefined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  RequireDefined(*this, "data");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  RequireDefined(*this, "mutable_data");
  return node_->data;
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " +
                     ShapeToString(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw ShapeError("at(): index rank " + std::to_string(index.size()) +
                     " does not match " + ShapeToString(s));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw InvalidArgument("at(): index out of range");
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node_->data[flat];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  RequireDefined(*this, "set_requires_grad");
  node_->requires_grad = value;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  RequireDefined(*this, "grad");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  RequireDefined(*this, "mutable_grad");
  if (node_->grad.size() != node_->data.size()) {
    node_->grad.assign(node_->data.size(), 0.0);
  }
  return node_->grad;
}

void Tensor::ZeroGrad() {
  RequireDefined(*this, "ZeroGrad");
  node_->grad.assign(node_->data.size(), 0.0);
}

Tensor Tensor::Detach() const {
  RequireDefined(*this, "Detach");
  return TensorAccess::Make(node_->shape, node_->data);
}

// ---------------------------------------------------------------------------

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape* Tape::Active() { return g_active_tape; }

void Tape::Record(std::string_view op, std::vector<Tensor> inputs,
                  const Tensor& output, BackwardFn backward) {
  entries_.push_back(
      Entry{op, std::move(inputs), output, std::move(backward)});
}

void Tape::Backward(const Tensor& loss) {
  RequireDefined(loss, "Backward");
  if (loss.size() != 1) {
    throw ShapeError("Backward: loss must be scalar, got shape " +
                     ShapeToString(loss.shape()));
  }
  std::size_t end = entries_.size();
  while (end > 0 && entries_[end - 1].output.id() != loss.id()) --end;
  if (end == 0) {
    throw InvalidArgument("Backward: loss was not produced on this tape");
  }

  for (Entry& e : entries_) e.output.ZeroGrad();

  const bool checked = CheckedMode();
  std::unordered_set<const void*> reached;
  reached.insert(loss.id());
  const_cast<Tensor&>(loss).mutable_grad()[0] = 1.0;

  for (std::size_t i = end; i-- > 0;) {
    Entry& e = entries_[i];
    if (!reached.contains(e.output.id())) continue;
    e.backward(e.output.grad());
    for (const Tensor& in : e.inputs) {
      if (!in.requires_grad()) continue;
      reached.insert(in.id());
      if (checked && in.has_grad()) CheckFinite(in.grad(), e.op, "gradient");
    }
  }
}

void SetCheckedMode(bool enabled) { g_checked_mode.store(enabled); }
bool CheckedMode() { return g_checked_mode.load(); }

// ---------------------------------------------------------------------------

Tensor MatMul(const Tensor& a, const Tensor& b) {
  constexpr std::string_view kOp = "matmul";
  RequireDefined(a, kOp);
  RequireDefined(b, kOp);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) ThrowShape(kOp, sa, sb, "rank < 2");
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t n = sb[sb.size() - 1];
  if (sb[sb.size() - 2] != k) ThrowShape(kOp, sa, sb, "inner dimensions differ");

  // Broadcast batch dims, right aligned.
  const std::size_t ra = sa.size() - 2;
  const std::size_t rb = sb.size() - 2;
  const std::size_t rank = std::max(ra, rb);
  Shape batch(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i + ra >= rank ? sa[i + ra - rank] : 1;
    const std::size_t db = i + rb >= rank ? sb[i + rb - rank] : 1;
    if (da != db && da != 1 && db != 1) {
      ThrowShape(kOp, sa, sb, "batch dimensions not broadcastable");
    }
    batch[i] = std::max(da, db);
  }
  const std::size_t nbatch = NumElements(batch);
  std::vector<std::size_t> a_off(nbatch), b_off(nbatch);
  for (std::size_t flat = 0; flat < nbatch; ++flat) {
    std::size_t rem = flat, ia = 0, ib = 0, stride_a = 1, stride_b = 1;
    for (std::size_t i = rank; i-- > 0;) {
      const std::size_t idx = rem % batch[i];
      rem /= batch[i];
      if (i + ra >= rank) {
        const std::size_t d = sa[i + ra - rank];
        ia += (d == 1 ? 0 : idx) * stride_a;
        stride_a *= d;
      }
      if (i + rb >= rank) {
        const std::size_t d = sb[i + rb - rank];
        ib += (d == 1 ? 0 : idx) * stride_b;
        stride_b *= d;
      }
    }
    a_off[flat] = ia * m * k;
    b_off[flat] = ib * k * n;
  }

  std::vector<double> out(nbatch * m * n, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t t = 0; t < nbatch; ++t) {
    const double* A = pa + a_off[t];
    const double* B = pb + b_off[t];
    double* C = out.data() + t * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        const double* brow = B + p * n;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape({&a, &b})) {
    MarkRecorded(result);
    tape->Record(kOp, {a, b}, result,
                 [a, b, a_off, b_off, m, k, n](std::span<const double> g) {
                   auto ga = GradOf(a);
                   auto gb = GradOf(b);
                   const double* pa = a.data().data();
                   const double* pb = b.data().data();
                   for (std::size_t t = 0; t < a_off.size(); ++t) {
                     const double* G = g.data() + t * m * n;
                     if (!ga.empty()) {
                       const double* B = pb + b_off[t];
                       double* GA = ga.data() + a_off[t];
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t p = 0; p < k; ++p) {
                           double acc = 0.0;
                           for (std::size_t j = 0; j < n; ++j) {
                             acc += G[i * n + j] * B[p * n + j];
                           }
                           GA[i * k + p] += acc;
                         }
                       }
                     }
                     if (!gb.empty()) {
                       const double* A = pa + a_off[t];
                       double* GB = gb.data() + b_off[t];
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t p = 0; p < k; ++p) {
                           const double av = A[i * k + p];
                           for (std::size_t j = 0; j < n; ++j) {
                             GB[p * n + j] += av * G[i * n + j];
                           }
                         }
                       }
                     }
                   }
                 });
  }
  return result;
}

Tensor TransposeLast2(const Tensor& x) {
  constexpr std::string_view kOp = "transpose";
  RequireDefined(x, kOp);
  const Shape& s = x.shape();
  if (s.size() < 2) ThrowShape(kOp, s, s, "rank < 2");
  const std::size_t r = s[s.size() - 2];
  const std::size_t c = s[s.size() - 1];
  const std::size_t nb = x.size() / (r * c);
  std::vector<double> out(x.size());
  const double* px = x.data().data();
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        out[b * r * c + j * r + i] = px[b * r * c + i * c + j];
      }
    }
  }
  Shape os = s;
  std::swap(os[os.size() - 2], os[os.size() - 1]);
  Tensor result = NewOutput(kOp, std::move(os), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x, nb, r, c](std::span<const double> g) {
      auto gx = GradOf(x);
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            gx[b * r * c + i * c + j] += g[b * r * c + j * r + i];
          }
        }
      }
    });
  }
  return result;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  constexpr std::string_view kOp = "add";
  RequireDefined(a, kOp);
  RequireDefined(b, kOp);
  RequireSameShape(kOp, a, b);
  std::vector<double> out(a.size());
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  Tensor result = NewOutput(kOp, a.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&a, &b})) {
    MarkRecorded(result);
    tape->Record(kOp, {a, b}, result, [a, b](std::span<const double> g) {
      for (auto gi : {GradOf(a), GradOf(b)}) {
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
      }
    });
  }
  return result;
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  constexpr std::string_view kOp = "mul";
  RequireDefined(a, kOp);
  RequireDefined(b, kOp);
  RequireSameShape(kOp, a, b);
  std::vector<double> out(a.size());
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  Tensor result = NewOutput(kOp, a.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&a, &b})) {
    MarkRecorded(result);
    tape->Record(kOp, {a, b}, result, [a, b](std::span<const double> g) {
      auto ga = GradOf(a);
      auto gb = GradOf(b);
      auto da = a.data();
      auto db = b.data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * db[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * da[i];
    });
  }
  return result;
}

Tensor Scale(const Tensor& x, double factor) {
  constexpr std::string_view kOp = "scale";
  RequireDefined(x, kOp);
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x, factor](std::span<const double> g) {
      auto gx = GradOf(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return result;
}

Tensor Sum(const Tensor& x) {
  constexpr std::string_view kOp = "sum";
  RequireDefined(x, kOp);
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor result = NewOutput(kOp, {}, {total});
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x](std::span<const double> g) {
      auto gx = GradOf(x);
      for (double& v : gx) v += g[0];
    });
  }
  return result;
}

Tensor Concat(std::span<const Tensor> parts, std::size_t axis) {
  constexpr std::string_view kOp = "concat";
  if (parts.empty()) throw InvalidArgument("concat: no inputs");
  for (const Tensor& p : parts) RequireDefined(p, kOp);
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) ThrowShape(kOp, s0, s0, "axis out of range");
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) ThrowShape(kOp, s0, s, "rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != s0[i]) {
        ThrowShape(kOp, s0, s, "non-concat dimensions differ");
      }
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit total = SplitAt(out_shape, axis);
  std::vector<double> out(NumElements(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const AxisSplit ps = SplitAt(p.shape(), axis);
    const std::size_t block = ps.axis * ps.inner;
    auto src = p.data();
    for (std::size_t o = 0; o < ps.outer; ++o) {
      std::copy_n(src.begin() + o * block, block,
                  out.begin() + o * total.axis * total.inner + offset);
    }
    offset += block;
  }
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape(parts)) {
    MarkRecorded(result);
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape->Record(kOp, inputs, result,
                 [inputs, offsets, axis, total](std::span<const double> g) {
                   for (std::size_t k = 0; k < inputs.size(); ++k) {
                     auto gp = GradOf(inputs[k]);
                     if (gp.empty()) continue;
                     const AxisSplit ps = SplitAt(inputs[k].shape(), axis);
                     const std::size_t block = ps.axis * ps.inner;
                     for (std::size_t o = 0; o < ps.outer; ++o) {
                       const double* src =
                           g.data() + o * total.axis * total.inner + offsets[k];
                       double* dst = gp.data() + o * block;
                       for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                     }
                   }
                 });
  }
  return result;
}

Tensor Concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return Concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor Slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length) {
  constexpr std::string_view kOp = "slice";
  RequireDefined(x, kOp);
  const Shape& s = x.shape();
  if (axis >= s.size() || length == 0 || start + length > s[axis]) {
    std::ostringstream os;
    os << "slice: range [" << start << ", " << start + length << ") on axis "
       << axis << " invalid for shape " << ShapeToString(s);
    throw ShapeError(os.str());
  }
  const AxisSplit in = SplitAt(s, axis);
  Shape out_shape = s;
  out_shape[axis] = length;
  const std::size_t block = length * in.inner;
  std::vector<double> out(in.outer * block);
  auto src = x.data();
  for (std::size_t o = 0; o < in.outer; ++o) {
    std::copy_n(src.begin() + o * in.axis * in.inner + start * in.inner, block,
                out.begin() + o * block);
  }
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result,
                 [x, in, start, block](std::span<const double> g) {
                   auto gx = GradOf(x);
                   for (std::size_t o = 0; o < in.outer; ++o) {
                     double* dst =
                         gx.data() + o * in.axis * in.inner + start * in.inner;
                     const double* src = g.data() + o * block;
                     for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                   }
                 });
  }
  return result;
}

Tensor Reshape(const Tensor& x, Shape shape) {
  constexpr std::string_view kOp = "reshape";
  RequireDefined(x, kOp);
  if (NumElements(shape) != x.size()) {
    ThrowShape(kOp, x.shape(), shape, "element count differs");
  }
  Tensor result = NewOutput(
      kOp, std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x](std::span<const double> g) {
      auto gx = GradOf(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
  }
  return result;
}

Tensor Expand(const Tensor& x, std::size_t count) {
  constexpr std::string_view kOp = "expand";
  RequireDefined(x, kOp);
  if (count == 0) throw ShapeError("expand: count must be positive");
  Shape out_shape;
  out_shape.push_back(count);
  out_shape.insert(out_shape.end(), x.shape().begin(), x.shape().end());
  std::vector<double> out;
  out.reserve(count * x.size());
  for (std::size_t c = 0; c < count; ++c) {
    out.insert(out.end(), x.data().begin(), x.data().end());
  }
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x, count](std::span<const double> g) {
      auto gx = GradOf(x);
      const std::size_t n = gx.size();
      for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[c * n + i];
      }
    });
  }
  return result;
}

Tensor Sigmoid(const Tensor& x) {
  constexpr std::string_view kOp = "sigmoid";
  RequireDefined(x, kOp);
  std::vector<double> out(x.size());
  auto dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = dx[i];
    if (v >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    Tensor y = result;
    tape->Record(kOp, {x}, result, [x, y](std::span<const double> g) {
      auto gx = GradOf(x);
      auto dy = y.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += g[i] * dy[i] * (1.0 - dy[i]);
      }
    });
  }
  return result;
}

Tensor Gelu(const Tensor& x) {
  constexpr std::string_view kOp = "gelu";
  RequireDefined(x, kOp);
  std::vector<double> out(x.size());
  auto dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * dx[i] * (1.0 + std::erf(dx[i] * std::numbers::sqrt2 / 2.0));
  }
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x](std::span<const double> g) {
      auto gx = GradOf(x);
      auto dx = x.data();
      const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double v = dx[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        gx[i] += g[i] * (cdf + v * pdf);
      }
    });
  }
  return result;
}

Tensor Relu(const Tensor& x) {
  constexpr std::string_view kOp = "relu";
  RequireDefined(x, kOp);
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0 ? v : 0.0;
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result, [x](std::span<const double> g) {
      auto gx = GradOf(x);
      auto dx = x.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (dx[i] > 0) gx[i] += g[i];
      }
    });
  }
  return result;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  constexpr std::string_view kOp = "layer_norm";
  RequireDefined(x, kOp);
  RequireDefined(gain, kOp);
  RequireDefined(bias, kOp);
  const Shape& s = x.shape();
  if (s.empty()) ThrowShape(kOp, s, gain.shape(), "rank 0 input");
  const std::size_t d = s.back();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    ThrowShape(kOp, s, gain.shape(), "gain/bias must be [last dim]");
  }
  const std::size_t rows = x.size() / d;
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.size());
  auto dx = x.data();
  auto dg = gain.data();
  auto db = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = dx.data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    inv_std[r] = inv;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (row[i] - mean) * inv;
      xhat[r * d + i] = h;
      out[r * d + i] = dg[i] * h + db[i];
    }
  }
  Tensor result = NewOutput(kOp, s, std::move(out));
  if (Tape* tape = RecordingTape({&x, &gain, &bias})) {
    MarkRecorded(result);
    tape->Record(
        kOp, {x, gain, bias}, result,
        [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), d,
         rows](std::span<const double> g) {
          auto gx = GradOf(x);
          auto gg = GradOf(gain);
          auto gb = GradOf(bias);
          auto dg = gain.data();
          std::vector<double> dxhat(d);
          for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = g.data() + r * d;
            const double* hr = xhat.data() + r * d;
            if (!gg.empty()) {
              for (std::size_t i = 0; i < d; ++i) gg[i] += gr[i] * hr[i];
            }
            if (!gb.empty()) {
              for (std::size_t i = 0; i < d; ++i) gb[i] += gr[i];
            }
            if (gx.empty()) continue;
            double sum = 0.0, dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
              dxhat[i] = gr[i] * dg[i];
              sum += dxhat[i];
              dot += dxhat[i] * hr[i];
            }
            const double scale = inv_std[r] / static_cast<double>(d);
            for (std::size_t i = 0; i < d; ++i) {
              gx[r * d + i] += scale * (static_cast<double>(d) * dxhat[i] - sum -
                                        hr[i] * dot);
            }
          }
        });
  }
  return result;
}

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  constexpr std::string_view kOp = "linear";
  RequireDefined(x, kOp);
  RequireDefined(w, kOp);
  const Shape& s = x.shape();
  if (s.empty() || w.rank() != 2 || w.dim(0) != s.back()) {
    ThrowShape(kOp, s, w.shape(), "input last dim must equal weight rows");
  }
  const std::size_t in = w.dim(0);
  const std::size_t out_dim = w.dim(1);
  if (b.defined() && b.shape() != Shape{out_dim}) {
    ThrowShape(kOp, w.shape(), b.shape(), "bias must be [out]");
  }
  const std::size_t rows = x.size() / in;
  std::vector<double> out(rows * out_dim, 0.0);
  auto dx = x.data();
  auto dw = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = out.data() + r * out_dim;
    if (b.defined()) std::copy(b.data().begin(), b.data().end(), orow);
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = dx[r * in + i];
      const double* wrow = dw.data() + i * out_dim;
      for (std::size_t o = 0; o < out_dim; ++o) orow[o] += xv * wrow[o];
    }
  }
  Shape out_shape = s;
  out_shape.back() = out_dim;
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape({&x, &w, &b})) {
    MarkRecorded(result);
    std::vector<Tensor> inputs{x, w};
    if (b.defined()) inputs.push_back(b);
    tape->Record(kOp, std::move(inputs), result,
                 [x, w, b, rows, in, out_dim](std::span<const double> g) {
                   auto gx = GradOf(x);
                   auto gw = GradOf(w);
                   auto gb = GradOf(b);
                   auto dx = x.data();
                   auto dw = w.data();
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* grow = g.data() + r * out_dim;
                     if (!gb.empty()) {
                       for (std::size_t o = 0; o < out_dim; ++o) gb[o] += grow[o];
                     }
                     for (std::size_t i = 0; i < in; ++i) {
                       const double* wrow = dw.data() + i * out_dim;
                       if (!gx.empty()) {
                         double acc = 0.0;
                         for (std::size_t o = 0; o < out_dim; ++o) {
                           acc += grow[o] * wrow[o];
                         }
                         gx[r * in + i] += acc;
                       }
                       if (!gw.empty()) {
                         const double xv = dx[r * in + i];
                         double* gwrow = gw.data() + i * out_dim;
                         for (std::size_t o = 0; o < out_dim; ++o) {
                           gwrow[o] += xv * grow[o];
                         }
                       }
                     }
                   }
                 });
  }
  return result;
}

Tensor EmbeddingLookup(const Tensor& table, std::span<const int> ids,
                       const Shape& ids_shape) {
  constexpr std::string_view kOp = "embedding";
  RequireDefined(table, kOp);
  if (table.rank() != 2) ThrowShape(kOp, table.shape(), ids_shape, "table must be rank 2");
  if (NumElements(ids_shape) != ids.size()) {
    throw ShapeError("embedding: ids length " + std::to_string(ids.size()) +
                     " does not match shape " + ShapeToString(ids_shape));
  }
  const std::size_t vocab = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  auto dt = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw InvalidArgument("embedding: token id " + std::to_string(ids[i]) +
                            " out of range for vocabulary of " +
                            std::to_string(vocab));
    }
    std::copy_n(dt.begin() + ids[i] * d, d, out.begin() + i * d);
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(d);
  Tensor result = NewOutput(kOp, std::move(out_shape), std::move(out));
  if (Tape* tape = RecordingTape({&table})) {
    MarkRecorded(result);
    std::vector<int> saved(ids.begin(), ids.end());
    tape->Record(kOp, {table}, result,
                 [table, saved = std::move(saved), d](std::span<const double> g) {
                   auto gt = GradOf(table);
                   for (std::size_t i = 0; i < saved.size(); ++i) {
                     double* dst = gt.data() + saved[i] * d;
                     for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
                   }
                 });
  }
  return result;
}

namespace {

void SoftmaxBackwardStrided(std::span<const double> y, std::span<const double> g,
                            std::span<double> gx, const AxisSplit& s) {
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      double dot = 0.0;
      for (std::size_t a = 0; a < s.axis; ++a) {
        dot += g[base + a * s.inner] * y[base + a * s.inner];
      }
      for (std::size_t a = 0; a < s.axis; ++a) {
        const std::size_t idx = base + a * s.inner;
        gx[idx] += y[idx] * (g[idx] - dot);
      }
    }
  }
}

}  // namespace

Tensor Softmax(const Tensor& x, std::size_t axis) {
  constexpr std::string_view kOp = "softmax";
  RequireDefined(x, kOp);
  if (axis >= x.rank()) ThrowShape(kOp, x.shape(), x.shape(), "axis out of range");
  const AxisSplit s = SplitAt(x.shape(), axis);
  std::vector<double> out(x.size());
  auto dx = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      double mx = dx[base];
      for (std::size_t a = 1; a < s.axis; ++a) mx = std::max(mx, dx[base + a * s.inner]);
      double total = 0.0;
      for (std::size_t a = 0; a < s.axis; ++a) {
        const double e = std::exp(dx[base + a * s.inner] - mx);
        out[base + a * s.inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < s.axis; ++a) out[base + a * s.inner] /= total;
    }
  }
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    Tensor y = result;
    tape->Record(kOp, {x}, result, [x, y, s](std::span<const double> g) {
      SoftmaxBackwardStrided(y.data(), g, GradOf(x), s);
    });
  }
  return result;
}

Tensor MaskedSoftmax(const Tensor& x, std::span<const std::uint8_t> mask) {
  constexpr std::string_view kOp = "masked_softmax";
  RequireDefined(x, kOp);
  const Shape& s = x.shape();
  if (s.size() < 2) ThrowShape(kOp, s, s, "rank < 2");
  const std::size_t rows_per = s[s.size() - 2];
  const std::size_t cols = s.back();
  if (mask.size() != rows_per * cols) {
    throw ShapeError("masked_softmax: mask has " + std::to_string(mask.size()) +
                     " entries, expected " + std::to_string(rows_per * cols) +
                     " for shape " + ShapeToString(s));
  }
  const std::size_t rows = x.size() / cols;
  std::vector<double> out(x.size(), 0.0);
  auto dx = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* m = mask.data() + (r % rows_per) * cols;
    const double* xr = dx.data() + r * cols;
    double* yr = out.data() + r * cols;
    bool any = false;
    double mx = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!m[c]) continue;
      mx = any ? std::max(mx, xr[c]) : xr[c];
      any = true;
    }
    if (!any) throw InvalidArgument("masked_softmax: row with every slot masked");
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!m[c]) continue;
      yr[c] = std::exp(xr[c] - mx);
      total += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= total;
  }
  Tensor result = NewOutput(kOp, s, std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    Tensor y = result;
    const AxisSplit split{rows, cols, 1};
    tape->Record(kOp, {x}, result, [x, y, split](std::span<const double> g) {
      // Masked slots have y == 0, so they receive zero gradient.
      SoftmaxBackwardStrided(y.data(), g, GradOf(x), split);
    });
  }
  return result;
}

Tensor Dropout(const Tensor& x, double rate, Rng& rng) {
  constexpr std::string_view kOp = "dropout";
  RequireDefined(x, kOp);
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidArgument("dropout: rate must be in [0, 1)");
  }
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> scale(x.size());
  for (double& v : scale) v = rng.Uniform() < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  auto dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] * scale[i];
  Tensor result = NewOutput(kOp, x.shape(), std::move(out));
  if (Tape* tape = RecordingTape({&x})) {
    MarkRecorded(result);
    tape->Record(kOp, {x}, result,
                 [x, scale = std::move(scale)](std::span<const double> g) {
                   auto gx = GradOf(x);
                   for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * scale[i];
                 });
  }
  return result;
}

Tensor NllLoss(const Tensor& logits, std::span<const int> targets,
               std::span<const std::uint8_t> pad_mask) {
  constexpr std::string_view kOp = "nll_loss";
  RequireDefined(logits, kOp);
  if (logits.rank() != 3) {
    throw ShapeError("nll_loss: logits must be [B, T, V], got " +
                     ShapeToString(logits.shape()));
  }
  const std::size_t positions = logits.dim(0) * logits.dim(1);
  const std::size_t vocab = logits.dim(2);
  if (targets.size() != positions || pad_mask.size() != positions) {
    throw ShapeError("nll_loss: targets/pad_mask must have B*T = " +
                     std::to_string(positions) + " entries");
  }
  auto dl = logits.data();
  std::vector<double> probs(logits.size(), 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < positions; ++p) {
    if (pad_mask[p]) continue;
    const int t = targets[p];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw InvalidArgument("nll_loss: target id " + std::to_string(t) +
                            " out of range for vocabulary of " +
                            std::to_string(vocab));
    }
    const double* row = dl.data() + p * vocab;
    double mx = row[0];
    for (std::size_t v = 1; v < vocab; ++v) mx = std::max(mx, row[v]);
    double z = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) {
      probs[p * vocab + v] = std::exp(row[v] - mx);
      z += probs[p * vocab + v];
    }
    for (std::size_t v = 0; v < vocab; ++v) probs[p * vocab + v] /= z;
    total += (mx + std::log(z)) - row[t];
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  Tensor result = NewOutput(kOp, {}, {loss});
  if (Tape* tape = RecordingTape({&logits})) {
    MarkRecorded(result);
    std::vector<int> tgt(targets.begin(), targets.end());
    std::vector<std::uint8_t> pad(pad_mask.begin(), pad_mask.end());
    tape->Record(kOp, {logits}, result,
                 [logits, probs = std::move(probs), tgt = std::move(tgt),
                  pad = std::move(pad), vocab, count](std::span<const double> g) {
                   if (count == 0) return;
                   auto gl = GradOf(logits);
                   const double scale = g[0] / static_cast<double>(count);
                   for (std::size_t p = 0; p < tgt.size(); ++p) {
                     if (pad[p]) continue;
                     for (std::size_t v = 0; v < vocab; ++v) {
                       gl[p * vocab + v] += scale * probs[p * vocab + v];
                     }
                     gl[p * vocab + tgt[p]] -= scale;
                   }
                 });
  }
  return result;
}

}  // namespace dualscribe
