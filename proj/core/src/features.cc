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

#include "dualscribe/features.h"

#include <algorithm>
#include <cmath>

#include "dualscribe/errors.h"
#include "dualscribe/feature_file.h"
#include "dualscribe/random.h"

namespace dualscribe {

namespace {

// Channel-last feature map used inside the stub stack.
struct Map {
  std::size_t h = 0, w = 0, c = 0;
  std::vector<double> v;  // [h][w][c]
  double& at(std::size_t y, std::size_t x, std::size_t ch) {
    return v[(y * w + x) * c + ch];
  }
  double at(std::size_t y, std::size_t x, std::size_t ch) const {
    return v[(y * w + x) * c + ch];
  }
};

enum class Act { kRelu, kTanh };

double Apply(Act act, double x) {
  return act == Act::kRelu ? (x > 0 ? x : 0.0) : std::tanh(x);
}

Map AvgPool2(const Map& in) {
  Map out{in.h / 2, in.w / 2, in.c, {}};
  out.v.assign(out.h * out.w * out.c, 0.0);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      for (std::size_t ch = 0; ch < in.c; ++ch) {
        out.at(y, x, ch) = 0.25 * (in.at(2 * y, 2 * x, ch) + in.at(2 * y, 2 * x + 1, ch) +
                                   in.at(2 * y + 1, 2 * x, ch) +
                                   in.at(2 * y + 1, 2 * x + 1, ch));
      }
    }
  }
  return out;
}

Map AdaptiveAvgPool(const Map& in, std::size_t gh, std::size_t gw) {
  Map out{gh, gw, in.c, {}};
  out.v.assign(gh * gw * in.c, 0.0);
  for (std::size_t i = 0; i < gh; ++i) {
    const std::size_t y0 = i * in.h / gh;
    const std::size_t y1 = ((i + 1) * in.h + gh - 1) / gh;
    for (std::size_t j = 0; j < gw; ++j) {
      const std::size_t x0 = j * in.w / gw;
      const std::size_t x1 = ((j + 1) * in.w + gw - 1) / gw;
      const double norm = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t ch = 0; ch < in.c; ++ch) {
        double acc = 0.0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) acc += in.at(y, x, ch);
        }
        out.at(i, j, ch) = acc * norm;
      }
    }
  }
  return out;
}

}  // namespace

SyntheticImage::SyntheticImage(std::size_t height, std::size_t width,
                               std::vector<double> pixels) {
  if (height == 0 || width == 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
  for (double p : pixels) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("image pixel outside [0, 1]");
    }
  }
  pixels_ = Tensor::FromData({height, width, 1}, std::move(pixels));
}

FeatureGrid::FeatureGrid(Tensor values) : values_(std::move(values)) {
  if (!values_.defined() || values_.rank() != 3) {
    throw ShapeError("feature grid must be [H, W, C]");
  }
  for (double v : values_.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("feature grid has non-finite value");
  }
}

std::string_view BackboneKindName(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::kStubGeneral:
      return "stub_general";
    case BackboneKind::kStubDomain:
      return "stub_domain";
    case BackboneKind::kPrecomputed:
      return "precomputed";
  }
  return "unknown";
}

BackboneKind ParseBackboneKind(std::string_view name) {
  if (name == "stub_general") return BackboneKind::kStubGeneral;
  if (name == "stub_domain") return BackboneKind::kStubDomain;
  if (name == "precomputed") return BackboneKind::kPrecomputed;
  throw InvalidArgument("unknown backbone kind '" + std::string(name) + "'");
}

Backbone::Backbone(BackboneSpec spec) : spec_(std::move(spec)) {
  if (spec_.grid_h == 0 || spec_.grid_w == 0) {
    throw InvalidArgument("backbone grid dimensions must be positive");
  }
  if (spec_.kind == BackboneKind::kPrecomputed) {
    for (auto& entry : ReadFeatureFile(spec_.path)) {
      precomputed_.emplace(std::move(entry.image_id), std::move(entry.grid));
    }
    return;
  }
  if (spec_.out_channels == 0) {
    throw InvalidArgument("backbone out_channels must be positive");
  }
  Rng rng(Rng::Derive(spec_.seed, static_cast<std::uint64_t>(spec_.kind)));
  const std::size_t plan[3][3] = {{1, 8, 3}, {8, 16, 3}, {16, spec_.out_channels, 1}};
  for (const auto& [in, out, k] : plan) {
    Conv conv{in, out, k, {}, {}};
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * k * k));
    conv.weights.resize(out * in * k * k);
    for (double& w : conv.weights) w = rng.Normal(0.0, stddev);
    conv.bias.resize(out);
    for (double& b : conv.bias) b = rng.Uniform(-spec_.bias_scale, spec_.bias_scale);
    convs_.push_back(std::move(conv));
  }
}

std::size_t Backbone::out_channels() const {
  if (spec_.kind == BackboneKind::kPrecomputed && !precomputed_.empty()) {
    return precomputed_.begin()->second.channels();
  }
  return spec_.out_channels;
}

FeatureGrid Backbone::Extract(const SyntheticImage* image,
                              std::string_view image_id) const {
  if (spec_.kind == BackboneKind::kPrecomputed) {
    auto it = precomputed_.find(image_id);
    if (it == precomputed_.end()) {
      throw DataError("no precomputed features for image '" +
                      std::string(image_id) + "' in " + spec_.path);
    }
    return it->second;
  }
  if (image == nullptr) {
    throw InvalidArgument("stub backbone requires an image");
  }
  if (image->height() < spec_.grid_h || image->width() < spec_.grid_w) {
    throw InvalidArgument("image " + std::to_string(image->height()) + "x" +
                          std::to_string(image->width()) +
                          " is smaller than feature grid " +
                          std::to_string(spec_.grid_h) + "x" +
                          std::to_string(spec_.grid_w));
  }
  const bool general = spec_.kind == BackboneKind::kStubGeneral;
  const Act acts[3] = {general ? Act::kRelu : Act::kTanh, Act::kRelu,
                       general ? Act::kRelu : Act::kTanh};

  Map map{image->height(), image->width(), 1,
          std::vector<double>(image->pixels().data().begin(),
                              image->pixels().data().end())};
  for (std::size_t layer = 0; layer < convs_.size(); ++layer) {
    const Conv& conv = convs_[layer];
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(conv.kernel / 2);
    Map next{map.h, map.w, conv.out, std::vector<double>(map.h * map.w * conv.out)};
    for (std::size_t y = 0; y < map.h; ++y) {
      for (std::size_t x = 0; x < map.w; ++x) {
        for (std::size_t o = 0; o < conv.out; ++o) {
          double acc = conv.bias[o];
          for (std::size_t i = 0; i < conv.in; ++i) {
            for (std::size_t ky = 0; ky < conv.kernel; ++ky) {
              const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
              if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(map.h)) continue;
              for (std::size_t kx = 0; kx < conv.kernel; ++kx) {
                const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(map.w)) continue;
                acc += conv.weights[((o * conv.in + i) * conv.kernel + ky) * conv.kernel + kx] *
                       map.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), i);
              }
            }
          }
          next.at(y, x, o) = Apply(acts[layer], acc);
        }
      }
    }
    map = std::move(next);
    if (layer < 2 && map.h / 2 >= spec_.grid_h && map.w / 2 >= spec_.grid_w) {
      map = AvgPool2(map);
    }
  }
  Map pooled = AdaptiveAvgPool(map, spec_.grid_h, spec_.grid_w);
  return FeatureGrid(Tensor::FromData({pooled.h, pooled.w, pooled.c},
                                      std::move(pooled.v)));
}

FeatureGrid Extract(const BackboneSpec& spec, const SyntheticImage& image) {
  return Backbone(spec).Extract(image);
}

FeatureGrid PoolGrid(const FeatureGrid& grid, std::size_t height,
                     std::size_t width) {
  if (height == 0 || width == 0 || grid.height() % height != 0 ||
      grid.width() % width != 0) {
    throw InvalidArgument("cannot pool " + std::to_string(grid.height()) + "x" +
                          std::to_string(grid.width()) + " grid to " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t fh = grid.height() / height;
  const std::size_t fw = grid.width() / width;
  if (fh == 1 && fw == 1) return grid;
  const std::size_t c = grid.channels();
  auto src = grid.values().data();
  std::vector<double> out(height * width * c, 0.0);
  const double norm = 1.0 / static_cast<double>(fh * fw);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t y = i * fh; y < (i + 1) * fh; ++y) {
          for (std::size_t x = j * fw; x < (j + 1) * fw; ++x) {
            acc += src[(y * grid.width() + x) * c + ch];
          }
        }
        out[(i * width + j) * c + ch] = acc * norm;
      }
    }
  }
  return FeatureGrid(Tensor::FromData({height, width, c}, std::move(out)));
}

std::pair<FeatureGrid, FeatureGrid> AlignGrids(const FeatureGrid& a,
                                               const FeatureGrid& b) {
  const std::size_t h = std::min(a.height(), b.height());
  const std::size_t w = std::min(a.width(), b.width());
  // A grid that is taller but narrower than the other cannot be pooled
  // onto it.
  const bool a_larger = a.height() >= b.height() && a.width() >= b.width();
  const bool b_larger = b.height() >= a.height() && b.width() >= a.width();
  if (!(a_larger || b_larger) ||
      a.height() % h != 0 || a.width() % w != 0 || b.height() % h != 0 ||
      b.width() % w != 0) {
    throw InvalidArgument(
        "unalignable feature grids " + std::to_string(a.height()) + "x" +
        std::to_string(a.width()) + " and " + std::to_string(b.height()) + "x" +
        std::to_string(b.width()));
  }
  return {PoolGrid(a, h, w), PoolGrid(b, h, w)};
}

FusionParams MakeFusionParams(std::size_t in_channels, std::size_t cells,
                              std::size_t d_model, Rng& rng,
                              ParameterStore* store, const std::string& prefix) {
  FusionParams p;
  p.projection = XavierUniform(in_channels, d_model, rng);
  p.bias = Tensor::Zeros({d_model});
  p.positions = NormalTensor({cells, d_model}, 0.02, rng);
  if (store != nullptr) {
    store->Register(prefix + ".projection", p.projection);
    store->Register(prefix + ".bias", p.bias);
    store->Register(prefix + ".positions", p.positions);
  } else {
    for (Tensor* t : {&p.projection, &p.bias, &p.positions}) t->set_requires_grad(true);
  }
  return p;
}

namespace {

// Stacks per-cell channel concatenations of the inputs into [B, cells, C].
Tensor StackCells(std::span<const FeatureGrid* const> a,
                  std::span<const FeatureGrid* const> b) {
  const std::size_t batch = a.size();
  const std::size_t cells = a[0]->cells();
  const std::size_t ca = a[0]->channels();
  const std::size_t cb = b.empty() ? 0 : b[0]->channels();
  std::vector<double> data(batch * cells * (ca + cb));
  for (std::size_t i = 0; i < batch; ++i) {
    if (a[i]->cells() != cells || a[i]->channels() != ca ||
        (!b.empty() && (b[i]->cells() != cells || b[i]->channels() != cb))) {
      throw ShapeError("feature grids within a batch must share a shape");
    }
    auto da = a[i]->values().data();
    for (std::size_t cell = 0; cell < cells; ++cell) {
      double* dst = data.data() + (i * cells + cell) * (ca + cb);
      std::copy_n(da.begin() + cell * ca, ca, dst);
      if (!b.empty()) {
        std::copy_n(b[i]->values().data().begin() + cell * cb, cb, dst + ca);
      }
    }
  }
  return Tensor::FromData({batch, cells, ca + cb}, std::move(data));
}

Tensor Project(const Tensor& stacked, const FusionParams& params) {
  const std::size_t batch = stacked.dim(0);
  const std::size_t cells = stacked.dim(1);
  if (stacked.dim(2) != params.in_channels()) {
    throw ShapeError("fusion projection expects " +
                     std::to_string(params.in_channels()) +
                     " input channels, got " + std::to_string(stacked.dim(2)));
  }
  if (cells != params.cells()) {
    throw ShapeError("fusion positions cover " + std::to_string(params.cells()) +
                     " cells, grid has " + std::to_string(cells));
  }
  Tensor projected = Linear(stacked, params.projection, params.bias);
  return Add(projected, Expand(params.positions, batch));
}

}  // namespace

Tensor FuseDualBatch(std::span<const FeatureGrid* const> a,
                     std::span<const FeatureGrid* const> b,
                     const FusionParams& params) {
  if (a.empty() || a.size() != b.size()) {
    throw InvalidArgument("fuse_dual: batches must be nonempty and equal length");
  }
  std::vector<FeatureGrid> aligned_a, aligned_b;
  aligned_a.reserve(a.size());
  aligned_b.reserve(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [ga, gb] = AlignGrids(*a[i], *b[i]);
    aligned_a.push_back(std::move(ga));
    aligned_b.push_back(std::move(gb));
  }
  std::vector<const FeatureGrid*> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa.push_back(&aligned_a[i]);
    pb.push_back(&aligned_b[i]);
  }
  return Project(StackCells(pa, pb), params);
}

Tensor SinglePathBatch(std::span<const FeatureGrid* const> a,
                       const FusionParams& params) {
  if (a.empty()) throw InvalidArgument("single_path: empty batch");
  return Project(StackCells(a, {}), params);
}

Tensor FuseDual(const FeatureGrid& a, const FeatureGrid& b,
                const FusionParams& params) {
  const FeatureGrid* pa[] = {&a};
  const FeatureGrid* pb[] = {&b};
  Tensor out = FuseDualBatch(pa, pb, params);
  return Reshape(out, {out.dim(1), out.dim(2)});
}

Tensor SinglePath(const FeatureGrid& a, const FusionParams& params) {
  const FeatureGrid* pa[] = {&a};
  Tensor out = SinglePathBatch(pa, params);
  return Reshape(out, {out.dim(1), out.dim(2)});
}

}  // namespace dualscribe
