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

#include "dualscribe/feature_file.h"

#include <fstream>
#include <set>

#include "dualscribe/binary_io.h"
#include "dualscribe/errors.h"

namespace dualscribe {

namespace {
constexpr char kMagic[4] = {'D', 'F', 'G', 'R'};
}

void WriteFeatureFile(const std::filesystem::path& path,
                      std::span<const FeatureFileEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  binary::WriteU32(out, kFeatureFileVersion);
  binary::WriteU32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    binary::WriteString(out, e.image_id);
    const FeatureGrid& g = e.grid;
    binary::WriteU32(out, static_cast<std::uint32_t>(g.height()));
    binary::WriteU32(out, static_cast<std::uint32_t>(g.width()));
    binary::WriteU32(out, static_cast<std::uint32_t>(g.channels()));
    auto v = g.values().data();
    for (std::size_t c = 0; c < g.channels(); ++c) {
      for (std::size_t y = 0; y < g.height(); ++y) {
        for (std::size_t x = 0; x < g.width(); ++x) {
          binary::WriteF32(out, static_cast<float>(
                                    v[(y * g.width() + x) * g.channels() + c]));
        }
      }
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<FeatureFileEntry> ReadFeatureFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path.string());
  char magic[4];
  binary::ReadExact(in, magic, 4, "feature file magic");
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw DataError(path.string() + " is not a DFGR feature file");
  }
  const std::uint32_t version = binary::ReadU32(in, "feature file version");
  if (version != kFeatureFileVersion) {
    throw DataError("unsupported feature file version " + std::to_string(version));
  }
  const std::uint32_t count = binary::ReadU32(in, "feature file count");
  std::vector<FeatureFileEntry> entries;
  std::set<std::string> seen;
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string id = binary::ReadString(in, "image id");
    if (!seen.insert(id).second) {
      throw DataError("duplicate image id '" + id + "' in " + path.string());
    }
    const std::uint32_t h = binary::ReadU32(in, "grid height");
    const std::uint32_t w = binary::ReadU32(in, "grid width");
    const std::uint32_t c = binary::ReadU32(in, "grid channels");
    if (h == 0 || w == 0 || c == 0) {
      throw DataError("zero-sized grid for '" + id + "'");
    }
    std::vector<double> values(static_cast<std::size_t>(h) * w * c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          values[(y * w + x) * c + ch] = binary::ReadF32(in, "grid values");
        }
      }
    }
    try {
      entries.push_back({std::move(id), FeatureGrid(Tensor::FromData(
                                             {h, w, c}, std::move(values)))});
    } catch (const InvalidArgument& e) {
      throw DataError(std::string("bad grid in ") + path.string() + ": " + e.what());
    }
  }
  return entries;
}

}  // namespace dualscribe
