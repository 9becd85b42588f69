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

// Image-to-report model: backbone feature grids -> encoder input (fused or
// single path) -> memory-augmented encoder -> meshed decoder.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "dualscribe/features.h"
#include "dualscribe/parameters.h"
#include "dualscribe/transformer.h"

namespace dualscribe {

// Which backbone paths feed the encoder.
enum class Variant { kGeneralOnly, kDomainOnly, kDoubleFeature };

std::string_view VariantName(Variant variant);
Variant ParseVariant(std::string_view name);
inline constexpr Variant kAllVariants[] = {
    Variant::kGeneralOnly, Variant::kDomainOnly, Variant::kDoubleFeature};

// Grids extracted for one image. A variant reads only the grids it needs.
struct ImageFeatures {
  std::optional<FeatureGrid> general;
  std::optional<FeatureGrid> domain;
};

struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
};

// Shapes of the two backbones' outputs; determines the fusion projection's
// input width and the number of positional embeddings.
struct InputGeometry {
  GridShape general;
  GridShape domain;
};

class ReportModel {
 public:
  // Encoder-input routes, reported through the input hook.
  static constexpr std::string_view kFuseDualPath = "fuse_dual";
  static constexpr std::string_view kSinglePath = "single_path";

  ReportModel(const ModelConfig& config, Variant variant,
              const InputGeometry& geometry, std::uint64_t seed);

  ReportModel(const ReportModel&) = delete;
  ReportModel& operator=(const ReportModel&) = delete;

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return variant_; }
  const InputGeometry& geometry() const { return geometry_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const FusionParams& fusion() const { return fusion_; }
  const TransformerParams& transformer() const { return transformer_; }

  // Called with kFuseDualPath or kSinglePath every time an encoder input is
  // built.
  void set_input_hook(std::function<void(std::string_view)> hook) {
    input_hook_ = std::move(hook);
  }

  // [B, cells, d_model].
  Tensor EncoderInput(std::span<const ImageFeatures* const> batch) const;
  EncoderTrace EncodeImages(std::span<const ImageFeatures* const> batch,
                            const ForwardOptions& options = {}) const;
  Tensor Logits(const TokenBatch& tokens, const EncoderTrace& trace,
                const ForwardOptions& options = {}) const;

 private:
  ModelConfig config_;
  Variant variant_;
  InputGeometry geometry_;
  ParameterStore store_;
  FusionParams fusion_;
  TransformerParams transformer_;
  std::function<void(std::string_view)> input_hook_;
};

}  // namespace dualscribe
