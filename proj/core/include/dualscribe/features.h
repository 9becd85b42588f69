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

// Image-region feature grids from two backbone families and their fusion
// into a single encoder input sequence.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dualscribe/parameters.h"
#include "dualscribe/tensor.h"

namespace dualscribe {

// Grayscale image with pixel values in [0, 1], stored as [H, W, 1].
class SyntheticImage {
 public:
  SyntheticImage(std::size_t height, std::size_t width,
                 std::vector<double> pixels);

  std::size_t height() const { return pixels_.dim(0); }
  std::size_t width() const { return pixels_.dim(1); }
  const Tensor& pixels() const { return pixels_; }
  double at(std::size_t row, std::size_t col) const {
    return pixels_.data()[row * width() + col];
  }

 private:
  Tensor pixels_;
};

// H x W grid of C-dimensional region features, stored as [H, W, C].
class FeatureGrid {
 public:
  explicit FeatureGrid(Tensor values);

  std::size_t height() const { return values_.dim(0); }
  std::size_t width() const { return values_.dim(1); }
  std::size_t channels() const { return values_.dim(2); }
  std::size_t cells() const { return height() * width(); }
  const Tensor& values() const { return values_; }

 private:
  Tensor values_;
};

enum class BackboneKind { kStubGeneral, kStubDomain, kPrecomputed };

std::string_view BackboneKindName(BackboneKind kind);
BackboneKind ParseBackboneKind(std::string_view name);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::kStubGeneral;
  std::size_t grid_h = 4;
  std::size_t grid_w = 4;
  std::size_t out_channels = 16;
  std::uint64_t seed = 0;       // stubs only
  std::string path;             // precomputed only
  double bias_scale = 0.1;      // stubs: biases drawn from U(-s, s)
};

// A frozen feature extractor. Stub kinds run a small conv/pool stack whose
// weights are derived from the seed at construction:
//
//   conv3x3(1->8) -> act -> [avgpool2] -> conv3x3(8->16) -> act -> [avgpool2]
//   -> conv1x1(16->C) -> act -> adaptive avgpool to (grid_h, grid_w)
//
// Each [avgpool2] is applied only when the halved map still covers the grid.
// kStubGeneral uses ReLU throughout; kStubDomain uses tanh/ReLU/tanh.
// kPrecomputed looks grids up by image id in a feature file.
//
// Extract is const and touches no mutable state, so one Backbone may serve
// many threads.
class Backbone {
 public:
  explicit Backbone(BackboneSpec spec);

  const BackboneSpec& spec() const { return spec_; }
  std::size_t out_channels() const;

  // Stub kinds ignore image_id; the precomputed kind ignores the image.
  FeatureGrid Extract(const SyntheticImage* image,
                      std::string_view image_id) const;
  FeatureGrid Extract(const SyntheticImage& image) const {
    return Extract(&image, {});
  }

 private:
  struct Conv {
    std::size_t in = 0, out = 0, kernel = 0;
    std::vector<double> weights;  // [out][in][k][k]
    std::vector<double> bias;
  };
  BackboneSpec spec_;
  std::vector<Conv> convs_;
  std::map<std::string, FeatureGrid, std::less<>> precomputed_;
};

// Convenience for stub kinds.
FeatureGrid Extract(const BackboneSpec& spec, const SyntheticImage& image);

// Reduces the larger grid to the smaller one's (H, W) with non-overlapping
// average pooling. Throws InvalidArgument when one grid is not an integer
// multiple of the other in both spatial dimensions.
std::pair<FeatureGrid, FeatureGrid> AlignGrids(const FeatureGrid& a,
                                               const FeatureGrid& b);
// Average-pools `grid` down to (height, width); both must divide evenly.
FeatureGrid PoolGrid(const FeatureGrid& grid, std::size_t height,
                     std::size_t width);

// Shared linear projection from concatenated channels to d_model plus a
// learned positional embedding per grid cell.
struct FusionParams {
  Tensor projection;  // [C_in, d_model]
  Tensor bias;        // [d_model]
  Tensor positions;   // [cells, d_model]

  std::size_t in_channels() const { return projection.dim(0); }
  std::size_t d_model() const { return projection.dim(1); }
  std::size_t cells() const { return positions.dim(0); }
};

// Xavier-uniform projection, zero bias, N(0, 0.02^2) positions. When
// `store` is given the tensors are registered under `prefix`.
FusionParams MakeFusionParams(std::size_t in_channels, std::size_t cells,
                              std::size_t d_model, Rng& rng,
                              ParameterStore* store = nullptr,
                              const std::string& prefix = "fusion");

// Concatenates the aligned grids per cell along channels, projects to
// d_model, flattens row-major and adds positional embeddings: [H*W, d_model].
Tensor FuseDual(const FeatureGrid& a, const FeatureGrid& b,
                const FusionParams& params);
Tensor SinglePath(const FeatureGrid& a, const FusionParams& params);

// Batched forms: [B, H*W, d_model].
Tensor FuseDualBatch(std::span<const FeatureGrid* const> a,
                     std::span<const FeatureGrid* const> b,
                     const FusionParams& params);
Tensor SinglePathBatch(std::span<const FeatureGrid* const> a,
                       const FusionParams& params);

}  // namespace dualscribe
