// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ttt::io {

/// 17 significant digits: enough to round-trip any double.
inline std::string format_real(double value) {
  std::array<char, 40> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

/// Shortest representation that parses back to the same double.
inline std::string format_shortest(double value) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

using MetricRows = std::vector<std::pair<std::string, double>>;

/// `metric,value` report.
inline void write_metric_rows(std::ostream& out, const MetricRows& rows) {
  out << "metric,value\n";
  for (const auto& [name, value] : rows) out << name << ',' << format_real(value) << '\n';
}

}  // namespace ttt::io
