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

#include "dualscribe/text.h"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>

#include "dualscribe/errors.h"
#include "dualscribe/transformer.h"

namespace dualscribe {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

bool AttachesLeft(const std::string& token) {
  static const std::string_view kClosing = ".,;:!?)]}%";
  return token.size() == 1 && kClosing.find(token[0]) != std::string_view::npos;
}

bool AttachesRight(const std::string& token) {
  return token == "(" || token == "[" || token == "{";
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (IsSpace(c)) {
      flush();
    } else if (IsPunct(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return tokens;
}

std::string Detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool glue = true;
  for (const auto& token : tokens) {
    if (!glue && !AttachesLeft(token)) out.push_back(' ');
    out += token;
    glue = AttachesRight(token);
  }
  return out;
}

Vocabulary::Vocabulary() {
  Append(std::string(kPad));
  Append(std::string(kBos));
  Append(std::string(kEos));
  Append(std::string(kUnk));
}

void Vocabulary::Append(std::string token) {
  if (ids_.contains(token)) throw InvalidArgument("duplicate vocabulary token '" + token + "'");
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(std::span<const std::vector<std::string>> documents,
                             std::size_t min_freq) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : documents) {
    for (const auto& token : doc) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_freq && token.find_first_of(" \t\r\n") == std::string::npos &&
        !token.empty()) {
      kept.emplace_back(token, count);
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (auto& [token, count] : kept) {
    if (!vocab.Contains(token)) vocab.Append(token);
  }
  return vocab;
}

int Vocabulary::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::Token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

std::vector<int> Vocabulary::Encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Id(t));
  return ids;
}

std::vector<std::string> Vocabulary::Decode(std::span<const int> ids) const {
  std::vector<std::string> tokens;
  for (int id : ids) {
    if (id == kEosId) break;
    if (id == kPadId || id == kBosId) continue;
    tokens.push_back(Token(id));
  }
  return tokens;
}

void Vocabulary::Write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::Read(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < kReserved || lines[0] != kPad || lines[1] != kBos || lines[2] != kEos ||
      lines[3] != kUnk) {
    throw DataError("vocabulary file does not start with the reserved tokens");
  }
  Vocabulary vocab;
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    if (lines[i].empty()) throw DataError("empty vocabulary entry on line " + std::to_string(i + 1));
    if (vocab.Contains(lines[i])) throw DataError("duplicate vocabulary entry '" + lines[i] + "'");
    vocab.Append(lines[i]);
  }
  return vocab;
}

}  // namespace dualscribe
