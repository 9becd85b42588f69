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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dualscribe/features.h"
#include "dualscribe/labeler.h"

namespace dualscribe {

// Key into a precomputed feature file.
struct FeatureKey {
  std::string key;
};

using ImageSource = std::variant<SyntheticImage, FeatureKey>;

struct CorpusEntry {
  std::string id;
  ImageSource image;
  std::string report;
  // Known labels, when the entry was generated with them.
  std::optional<LabelVector> truth;
};

// JSON Lines, one entry per line:
//   {"id": str, "report": str,
//    "image": {"height": H, "width": W, "pixels": [H*W numbers]}
//           | {"feature_key": str},
//    "labels": {"<Condition>": "Positive" | ...}}   (optional)
// Throws DataError naming `source` and the line on malformed input,
// duplicate ids or empty reports.
std::vector<CorpusEntry> ReadCorpus(std::istream& in, const std::string& source);
std::vector<CorpusEntry> ReadCorpusFile(const std::filesystem::path& path);
void WriteCorpus(std::ostream& out, std::span<const CorpusEntry> corpus);
void WriteCorpusFile(const std::filesystem::path& path, std::span<const CorpusEntry> corpus);

struct CorpusSplit {
  std::vector<std::size_t> train;  // indices into the corpus, ascending
  std::vector<std::size_t> test;
};

// Ranks entries by a seeded hash of their id and puts the first
// ceil(test_fraction * n) in the test split (at least one entry stays in
// train). Membership depends only on (id, seed), so reordering the corpus
// does not move entries between splits.
CorpusSplit SplitCorpus(std::span<const CorpusEntry> corpus, double test_fraction = 0.1,
                        std::uint64_t seed = 0);

}  // namespace dualscribe
