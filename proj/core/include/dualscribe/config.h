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

// Flat TOML-style key/value files:
//
//   # comment
//   seed = 7
//   [model]
//   d_model = 32          -> key "model.d_model"
//   variant = "double_feature"
//
// Values are kept as strings (quotes removed) and converted on access.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace dualscribe {

class KeyValueConfig {
 public:
  // Throws DataError naming `source` and the line on syntax errors or
  // repeated keys.
  static KeyValueConfig Parse(std::istream& in, const std::string& source);
  static KeyValueConfig FromFile(const std::filesystem::path& path);

  void Set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool Contains(std::string_view key) const { return values_.find(key) != values_.end(); }
  std::optional<std::string> Get(std::string_view key) const;

  // Typed accessors; throw DataError when the stored value does not parse.
  std::string GetString(std::string_view key, std::string fallback) const;
  std::int64_t GetInt(std::string_view key, std::int64_t fallback) const;
  std::uint64_t GetUnsigned(std::string_view key, std::uint64_t fallback) const;
  double GetDouble(std::string_view key, double fallback) const;
  bool GetBool(std::string_view key, bool fallback) const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

  // Later entries win.
  void Merge(const KeyValueConfig& overrides);

  // Section-grouped output that Parse reads back to the same values.
  void Write(std::ostream& out) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace dualscribe
