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
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dualscribe {

// Lowercases and splits on whitespace and ASCII punctuation; punctuation
// characters are kept as single-character tokens.
std::vector<std::string> Tokenize(std::string_view text);

// Joins with single spaces, without a space before closing punctuation or
// after opening brackets. Tokenize(Detokenize(t)) == t for tokens produced
// by Tokenize.
std::string Detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::size_t kReserved = 4;

  // Only the four reserved tokens.
  Vocabulary();

  // Tokens with count >= min_freq, ordered by descending count then
  // lexicographically.
  static Vocabulary Build(std::span<const std::vector<std::string>> documents,
                          std::size_t min_freq = 3);

  std::size_t size() const { return tokens_.size(); }
  int Id(std::string_view token) const;  // kUnkId when absent
  const std::string& Token(int id) const;
  bool Contains(std::string_view token) const;

  std::vector<int> Encode(std::span<const std::string> tokens) const;
  // Stops at EOS; skips PAD and BOS.
  std::vector<std::string> Decode(std::span<const int> ids) const;

  // One token per line, in id order.
  void Write(std::ostream& out) const;
  static Vocabulary Read(std::istream& in);

 private:
  void Append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace dualscribe
