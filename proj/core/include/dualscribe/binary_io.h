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

// Little-endian primitives shared by the binary container formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "dualscribe/errors.h"

namespace dualscribe::binary {

inline void WriteU32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void WriteU64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void WriteF32(std::ostream& out, float v) {
  WriteU32(out, std::bit_cast<std::uint32_t>(v));
}

inline void WriteF64(std::ostream& out, double v) {
  WriteU64(out, std::bit_cast<std::uint64_t>(v));
}

inline void WriteString(std::ostream& out, const std::string& s) {
  WriteU32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void ReadExact(std::istream& in, char* buf, std::size_t n,
                      const char* what) {
  in.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError(std::string("truncated input while reading ") + what);
  }
}

inline std::uint32_t ReadU32(std::istream& in, const char* what) {
  unsigned char b[4];
  ReadExact(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t ReadU64(std::istream& in, const char* what) {
  unsigned char b[8];
  ReadExact(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float ReadF32(std::istream& in, const char* what) {
  return std::bit_cast<float>(ReadU32(in, what));
}

inline double ReadF64(std::istream& in, const char* what) {
  return std::bit_cast<double>(ReadU64(in, what));
}

inline std::string ReadString(std::istream& in, const char* what,
                              std::uint32_t max_len = 1u << 20) {
  const std::uint32_t n = ReadU32(in, what);
  if (n > max_len) throw DataError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  ReadExact(in, s.data(), n, what);
  return s;
}

}  // namespace dualscribe::binary
