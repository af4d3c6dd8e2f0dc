/*
 * Copyright 2026 The causalrx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Dense CSV: header "code,<medication codes...>", then one row per disease or
// procedure: "<code>,<v_1>,...". Reals use shortest round-trip formatting.

#include <charconv>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/io_util.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/effects/effects.hpp"

namespace causalrx::effects {

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

template <typename Cell>
std::string format_csv(const EntityVocab& rows, const EntityVocab& meds, std::size_t n_rows, std::size_t n_cols,
                       Cell cell) {
  std::string out = "code";
  for (const auto& m : meds.codes()) out += "," + m;
  out += "\n";
  for (std::size_t r = 0; r < n_rows; ++r) {
    out += rows.code(static_cast<int>(r));
    for (std::size_t c = 0; c < n_cols; ++c) {
      out += ",";
      out += cell(r, c);
    }
    out += "\n";
  }
  return out;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Parses the grid and returns cells in vocabulary order.
inline std::vector<std::vector<std::string>> parse_grid(const std::string& text, const EntityVocab& rows,
                                                        const EntityVocab& meds) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> col_map;
  std::vector<std::vector<std::string>> grid(rows.size(), std::vector<std::string>(meds.size()));
  std::vector<char> seen(rows.size(), 0);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_row(trim(line));
    if (col_map.empty()) {
      if (cells.empty() || cells[0] != "code") throw ParseError("expected header starting with 'code'", line_no);
      for (std::size_t i = 1; i < cells.size(); ++i) col_map.push_back(meds.ordinal(cells[i]));
      if (col_map.size() != meds.size()) throw ParseError("header does not list every medication", line_no);
      continue;
    }
    if (cells.size() != col_map.size() + 1) throw ParseError("wrong number of columns", line_no);
    const int r = rows.ordinal(cells[0]);
    seen[static_cast<std::size_t>(r)] = 1;
    for (std::size_t i = 0; i < col_map.size(); ++i)
      grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(col_map[i])] = cells[i + 1];
  }
  if (col_map.empty()) throw ParseError("missing header");
  for (std::size_t r = 0; r < seen.size(); ++r)
    if (!seen[r]) throw ParseError("missing row for '" + rows.code(static_cast<int>(r)) + "'");
  return grid;
}

}  // namespace detail

inline std::string format_table_csv(const Table& t, const EntityVocab& rows, const EntityVocab& meds) {
  return detail::format_csv(rows, meds, t.rows, t.cols, [&](std::size_t r, std::size_t c) { return format_real(t(r, c)); });
}

inline std::string format_types_csv(const TypeTable& t, const EntityVocab& rows, const EntityVocab& meds) {
  return detail::format_csv(rows, meds, t.rows, t.cols,
                                 [&](std::size_t r, std::size_t c) { return std::to_string(t(r, c)); });
}

inline Table parse_table_csv(const std::string& text, const EntityVocab& rows, const EntityVocab& meds) {
  const auto grid = detail::parse_grid(text, rows, meds);
  Table t(rows.size(), meds.size());
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) {
      const std::string& s = grid[r][c];
      double v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'");
      t(r, c) = v;
    }
  return t;
}

inline TypeTable parse_types_csv(const std::string& text, const EntityVocab& rows, const EntityVocab& meds) {
  const auto grid = detail::parse_grid(text, rows, meds);
  TypeTable t(rows.size(), meds.size());
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) {
      const std::string& s = grid[r][c];
      int v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("bad integer '" + s + "'");
      t(r, c) = v;
    }
  return t;
}

}  // namespace causalrx::effects
