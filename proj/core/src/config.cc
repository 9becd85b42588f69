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

#include "dualscribe/config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "dualscribe/errors.h"

namespace dualscribe {

namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool ValidKey(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      return false;
    }
  }
  return true;
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (quoted && line[i] == '\\') {
      ++i;
      continue;
    }
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string Unquote(std::string_view v, const std::string& where) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        ++i;
        out.push_back(v[i] == 'n' ? '\n' : v[i]);
      } else if (v[i] == '"') {
        throw DataError(where + ": stray quote in string value");
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }
  if (!v.empty() && (v.front() == '"' || v.back() == '"')) {
    throw DataError(where + ": unterminated string value");
  }
  return std::string(v);
}

std::string Quote(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename T>
T ParseNumber(std::string_view key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("config key '" + std::string(key) + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::istream& in, const std::string& source) {
  KeyValueConfig config;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string_view body = Trim(StripComment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw DataError(where + ": malformed section header");
      section = std::string(Trim(body.substr(1, body.size() - 2)));
      if (!ValidKey(section)) throw DataError(where + ": invalid section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw DataError(where + ": expected 'key = value'");
    const std::string_view key = Trim(body.substr(0, eq));
    const std::string_view value = Trim(body.substr(eq + 1));
    if (!ValidKey(key)) throw DataError(where + ": invalid key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (config.Contains(full)) throw DataError(where + ": duplicate key '" + full + "'");
    config.Set(full, Unquote(value, where));
  }
  return config;
}

KeyValueConfig KeyValueConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  return Parse(in, path.string());
}

std::optional<std::string> KeyValueConfig::Get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::GetString(std::string_view key, std::string fallback) const {
  auto v = Get(key);
  return v ? *v : std::move(fallback);
}

std::int64_t KeyValueConfig::GetInt(std::string_view key, std::int64_t fallback) const {
  auto v = Get(key);
  return v ? ParseNumber<std::int64_t>(key, *v) : fallback;
}

std::uint64_t KeyValueConfig::GetUnsigned(std::string_view key, std::uint64_t fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  if (!v->empty() && v->front() == '-') {
    throw DataError("config key '" + std::string(key) + "' must be non-negative");
  }
  return ParseNumber<std::uint64_t>(key, *v);
}

double KeyValueConfig::GetDouble(std::string_view key, double fallback) const {
  auto v = Get(key);
  return v ? ParseNumber<double>(key, *v) : fallback;
}

bool KeyValueConfig::GetBool(std::string_view key, bool fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw DataError("config key '" + std::string(key) + "': expected true or false, got '" + *v + "'");
}

void KeyValueConfig::Merge(const KeyValueConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

void KeyValueConfig::Write(std::ostream& out) const {
  // Top-level keys first, then one block per section.
  for (const auto& [k, v] : values_) {
    if (k.find('.') == std::string::npos) out << k << " = " << Quote(v) << '\n';
  }
  std::string current;
  for (const auto& [k, v] : values_) {
    const auto dot = k.rfind('.');
    if (dot == std::string::npos) continue;
    const std::string section = k.substr(0, dot);
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = section;
    }
    out << k.substr(dot + 1) << " = " << Quote(v) << '\n';
  }
}

}  // namespace dualscribe
