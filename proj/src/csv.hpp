// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal CSV helpers for the trace schema and report writers. No quoting:
// none of the files this project reads or writes carries embedded commas.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faassim/error.hpp"

namespace faassim::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n' ||
                        s.front() == '\xEF' || s.front() == '\xBB' || s.front() == '\xBF')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

struct Table {
  std::filesystem::path path;
  std::vector<std::string> header;
  /// Rows as raw lines; `line_numbers[i]` is the 1-based file line of rows[i].
  std::vector<std::string> rows;
  std::vector<std::size_t> line_numbers;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw Error(ErrorCode::MissingColumn, path.string() + ": missing column '" + std::string(name) + "'");
  }

  std::string where(std::size_t row) const { return path.string() + ":" + std::to_string(line_numbers[row]); }
};

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Table t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!have_header) {
      for (auto f : split(line)) t.header.emplace_back(f);
      have_header = true;
      continue;
    }
    t.rows.push_back(line);
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw Error(ErrorCode::ParseError, path.string() + ": missing header row");
  return t;
}

}  // namespace faassim::csv
