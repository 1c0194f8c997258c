// Copyright 2026 The ncsched Authors.
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

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>

namespace ncsched {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

/// Writes comma-separated fields followed by a newline.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow() { out_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(double v) { return field(format_double(v)); }
  CsvRow& operator<<(const std::string& v) { return field(v); }
  CsvRow& operator<<(const char* v) { return field(v); }
  template <typename Int>
    requires std::is_integral_v<Int>
  CsvRow& operator<<(Int v) {
    return field(std::to_string(v));
  }

 private:
  CsvRow& field(const std::string& text) {
    if (!first_) out_ << ',';
    out_ << text;
    first_ = false;
    return *this;
  }

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace ncsched
