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

// Dense row-major float64 tensors with tape-based reverse-mode autodiff.
//
// A Tensor is a cheap shared handle. Operations are free functions; when a
// Tape is active on the calling thread (see Tape::Scope) and any input
// requires a gradient, the operation is recorded so Tape::Backward can
// propagate gradients. Without an active tape nothing is recorded, which is
// the inference path.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualscribe {

class Rng;

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  bool is_leaf = true;
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t size() const;

  std::span<const double> data() const;
  // Direct write access; intended for optimizers and initializers. Writing to
  // a tensor that is already recorded on a tape invalidates that tape.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates zeros on demand
  void ZeroGrad();

  // Copy of the values without gradient state.
  Tensor Detach() const;

  // Identity for tape bookkeeping and tests.
  const void* id() const { return node_.get(); }

 private:
  friend class Tape;
  friend struct TensorAccess;
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

// Ordered record of differentiable operations executed while the tape was
// active. Entries are appended in execution order, so inputs always precede
// the operations that consume them.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  struct Entry {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Makes `tape` the active tape of this thread for the scope's lifetime.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* Active();

  void Record(std::string_view op, std::vector<Tensor> inputs,
              const Tensor& output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and visits each recorded entry once in reverse
  // order. Leaf gradients accumulate (+=); intermediate gradients are reset at
  // the start of every call. Throws ShapeError for non-scalar loss and
  // InvalidArgument when the loss was not produced on this tape.
  void Backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void Clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

// When enabled, every op output and every backward gradient is checked for
// NaN/Inf and InvariantError is thrown on the first violation.
void SetCheckedMode(bool enabled);
bool CheckedMode();

// ---------------------------------------------------------------------------
// Operations. All validate shapes and throw ShapeError naming the shapes.

// a[..., M, K] x b[..., K, N] -> [..., M, N]; batch dims broadcast
// numpy-style (equal or 1, right aligned).
Tensor MatMul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor TransposeLast2(const Tensor& x);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, double factor);
// Sum of all elements as a scalar tensor.
Tensor Sum(const Tensor& x);

Tensor Concat(std::span<const Tensor> parts, std::size_t axis);
Tensor Concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor Slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length);
Tensor Reshape(const Tensor& x, Shape shape);
// Prepends a batch axis of size `count`, repeating x. Backward sums.
Tensor Expand(const Tensor& x, std::size_t count);

Tensor Sigmoid(const Tensor& x);
Tensor Gelu(const Tensor& x);  // exact erf form
Tensor Relu(const Tensor& x);

// Normalizes over the last axis, then applies gain and bias (both [D]).
inline constexpr double kLayerNormEpsilon = 1e-5;
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// x[..., in] * w[in, out] + b[out]. `b` may be undefined.
Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b);

// table[V, D]; ids interpreted with `ids_shape`; result ids_shape + [D].
Tensor EmbeddingLookup(const Tensor& table, std::span<const int> ids,
                       const Shape& ids_shape);

Tensor Softmax(const Tensor& x, std::size_t axis);
// Softmax over the last axis of x[..., T, S] with a [T, S] mask broadcast
// over leading axes. Masked slots (mask == 0) get probability exactly 0.
// Every row must keep at least one unmasked slot.
Tensor MaskedSoftmax(const Tensor& x, std::span<const std::uint8_t> mask);

// Inverted dropout; identity when rate == 0.
Tensor Dropout(const Tensor& x, double rate, Rng& rng);

// Mean over non-padded positions of -log softmax(logits)[target].
// logits [B, T, V]; targets and pad_mask have B*T entries; pad_mask != 0
// marks padding. Returns 0 when every position is padding.
Tensor NllLoss(const Tensor& logits, std::span<const int> targets,
               std::span<const std::uint8_t> pad_mask);

}  // namespace dualscribe
