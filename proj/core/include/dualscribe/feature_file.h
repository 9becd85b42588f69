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

// Precomputed feature container:
//
//   "DFGR" | version u32 | count u32 |
//   count x { id_len u32 | id UTF-8 | H u32 | W u32 | C u32 | C*H*W f32 }
//
// All integers and floats are little-endian. Values are stored
// channel-major (c, h, w), the layout CNN frameworks emit.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dualscribe/features.h"

namespace dualscribe {

inline constexpr std::uint32_t kFeatureFileVersion = 1;

struct FeatureFileEntry {
  std::string image_id;
  FeatureGrid grid;
};

void WriteFeatureFile(const std::filesystem::path& path,
                      std::span<const FeatureFileEntry> entries);
// Throws DataError on a missing file, bad magic/version, truncation or
// duplicate ids.
std::vector<FeatureFileEntry> ReadFeatureFile(const std::filesystem::path& path);

}  // namespace dualscribe
