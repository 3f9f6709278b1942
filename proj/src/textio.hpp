// Copyright 2026 The promptcgl Authors.
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

// Locale-independent number parsing/formatting for the text file formats.

#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace pcgl::text {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

template <typename T>
bool parse_fields(std::string_view line, std::vector<T>& out) {
  out.clear();
  const char* p = line.data();
  const char* end = p + line.size();
  while (true) {
    while (p != end && is_space(*p)) ++p;
    if (p == end) return true;
    if (*p == '+') ++p;
    T value{};
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || (next != end && !is_space(*next))) return false;
    out.push_back(value);
    p = next;
  }
}

inline bool parse_reals(std::string_view line, std::vector<double>& out) {
  return parse_fields(line, out);
}

inline bool parse_integers(std::string_view line, std::vector<long long>& out) {
  return parse_fields(line, out);
}

/// Shortest decimal form that parses back to the identical double.
inline void append_real(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

/// Fixed notation with `digits` fractional digits.
inline std::string fixed(double v, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, end);
}

}  // namespace pcgl::text
