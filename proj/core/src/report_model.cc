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

#include "dualscribe/report_model.h"

#include <algorithm>
#include <string>
#include <vector>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

std::string_view VariantName(Variant variant) {
  switch (variant) {
    case Variant::kGeneralOnly:
      return "general_only";
    case Variant::kDomainOnly:
      return "domain_only";
    case Variant::kDoubleFeature:
      return "double_feature";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (VariantName(v) == name) return v;
  }
  throw InvalidArgument("unknown variant '" + std::string(name) +
                        "' (expected general_only, domain_only or double_feature)");
}

namespace {

struct InputLayout {
  std::size_t channels;
  std::size_t cells;
};

InputLayout LayoutFor(Variant variant, const InputGeometry& g) {
  switch (variant) {
    case Variant::kGeneralOnly:
      return {g.general.channels, g.general.height * g.general.width};
    case Variant::kDomainOnly:
      return {g.domain.channels, g.domain.height * g.domain.width};
    case Variant::kDoubleFeature:
      return {g.general.channels + g.domain.channels,
              std::min(g.general.height, g.domain.height) *
                  std::min(g.general.width, g.domain.width)};
  }
  throw InvalidArgument("unknown variant");
}

}  // namespace

ReportModel::ReportModel(const ModelConfig& config, Variant variant,
                         const InputGeometry& geometry, std::uint64_t seed)
    : config_(config), variant_(variant), geometry_(geometry) {
  config_.Validate();
  const InputLayout layout = LayoutFor(variant_, geometry_);
  if (layout.channels == 0 || layout.cells == 0) {
    throw InvalidArgument("model input geometry has an empty grid for variant " +
                          std::string(VariantName(variant_)));
  }
  Rng rng(seed);
  fusion_ = MakeFusionParams(layout.channels, layout.cells, config_.d_model, rng,
                             &store_, "fusion");
  transformer_ = InitTransformer(config_, rng, &store_, "m2");
}

Tensor ReportModel::EncoderInput(std::span<const ImageFeatures* const> batch) const {
  if (batch.empty()) throw InvalidArgument("EncoderInput: empty batch");
  std::vector<const FeatureGrid*> general, domain;
  for (const ImageFeatures* f : batch) {
    if (variant_ != Variant::kDomainOnly) {
      if (!f->general) throw InvalidArgument("image lacks general backbone features");
      general.push_back(&*f->general);
    }
    if (variant_ != Variant::kGeneralOnly) {
      if (!f->domain) throw InvalidArgument("image lacks domain backbone features");
      domain.push_back(&*f->domain);
    }
  }
  if (variant_ == Variant::kDoubleFeature) {
    if (input_hook_) input_hook_(kFuseDualPath);
    return FuseDualBatch(general, domain, fusion_);
  }
  if (input_hook_) input_hook_(kSinglePath);
  return SinglePathBatch(variant_ == Variant::kGeneralOnly ? general : domain, fusion_);
}

EncoderTrace ReportModel::EncodeImages(std::span<const ImageFeatures* const> batch,
                                       const ForwardOptions& options) const {
  return Encode(EncoderInput(batch), config_, transformer_, options);
}

Tensor ReportModel::Logits(const TokenBatch& tokens, const EncoderTrace& trace,
                           const ForwardOptions& options) const {
  return DecodeForward(tokens, trace, config_, transformer_, options);
}

}  // namespace dualscribe
