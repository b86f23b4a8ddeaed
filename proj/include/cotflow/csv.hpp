// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cotflow::csv {

/// Shortest decimal that reads back as the same double.
std::string number(double x);
/// Empty string for nullopt.
std::string number(std::optional<double> x);

/// Quotes fields containing a comma, quote or newline.
std::string field(std::string_view s);

class Writer {
 public:
  explicit Writer(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

/// Splits CSV text into rows of fields (RFC 4180 quoting).
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace cotflow::csv
