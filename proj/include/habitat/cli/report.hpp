// Copyright 2026 The Habitat Forge Authors.
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

// Accuracy tables over several evaluation reports.
//
// table3_like: rows are configurations, columns are datasets. A row-mean
// "Avg" column is appended, and every row after the first gets a delta row
// against the first row.
//
// table6_like: exactly two columns (e.g. FlyBird vs Non-FlyBird). Each row
// gets a delta column (second minus first) and an "Avg" row closes the
// table.
//
// Text cells are percentages with two decimals; the JSON twin carries the
// raw fractions.

#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "habitat/core/error.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/zseval/zseval.hpp"

namespace habitat::cli {

enum class Layout { Table3Like, Table6Like };

inline std::string_view to_string(Layout l) { return l == Layout::Table3Like ? "table3_like" : "table6_like"; }

inline std::optional<Layout> parse_layout(std::string_view s) {
  if (s == "table3_like" || s == "table3") return Layout::Table3Like;
  if (s == "table6_like" || s == "table6") return Layout::Table6Like;
  return std::nullopt;
}

struct ReportCell {
  std::string row;
  std::string column;
  zseval::EvalReport report;
};

enum class RowKind { Data, Delta, Average };

struct TableRow {
  std::string label;
  RowKind kind = RowKind::Data;
  std::vector<double> values;
};

struct Table {
  Layout layout = Layout::Table3Like;
  std::vector<std::string> columns;  // value columns, derived ones included
  std::vector<TableRow> rows;
};

struct RenderedReport {
  Table table;
  std::string text;
  nlohmann::ordered_json json;
};

namespace detail {

inline std::set<std::string> class_set(const zseval::EvalReport& r) {
  std::set<std::string> s;
  for (const auto& c : r.classes) s.insert(normalize_name(c.name));
  return s;
}

inline std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

inline std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::size_t w = display_width(s);
  const std::string fill(width > w ? width - w : 0, ' ');
  return left ? s + fill : fill + s;
}

inline std::string percent(double v, bool sign) {
  char buf[32];
  std::snprintf(buf, sizeof buf, sign ? "%+.2f" : "%.2f", v * 100.0);
  return buf;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace detail

/// Arranges cells into a row x column grid of top-1 accuracies.
inline Table build_table(const std::vector<ReportCell>& cells, Layout layout) {
  if (cells.empty()) throw Error(ErrorCode::LayoutMismatch, "no reports given");
  std::vector<std::string> rows, cols;
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.row) == rows.end()) rows.push_back(c.row);
    if (std::find(cols.begin(), cols.end(), c.column) == cols.end()) cols.push_back(c.column);
  }
  if (layout == Layout::Table6Like && cols.size() != 2)
    throw Error(ErrorCode::LayoutMismatch, "table6_like needs exactly two columns, got " + std::to_string(cols.size()));

  std::vector<std::vector<const zseval::EvalReport*>> grid(rows.size(), std::vector<const zseval::EvalReport*>(cols.size()));
  for (const auto& c : cells) {
    const auto r = static_cast<std::size_t>(std::find(rows.begin(), rows.end(), c.row) - rows.begin());
    const auto k = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), c.column) - cols.begin());
    if (grid[r][k]) throw Error(ErrorCode::LayoutMismatch, "two reports for one cell", c.row + "," + c.column);
    grid[r][k] = &c.report;
  }
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!grid[r][k]) throw Error(ErrorCode::LayoutMismatch, "missing report for cell", rows[r] + "," + cols[k]);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto ref = detail::class_set(*grid[0][k]);
    for (std::size_t r = 1; r < rows.size(); ++r)
      if (detail::class_set(*grid[r][k]) != ref)
        throw Error(ErrorCode::LayoutMismatch, "reports in one column cover different classes", cols[k]);
  }

  Table t;
  t.layout = layout;
  t.columns = cols;
  if (layout == Layout::Table3Like) {
    t.columns.push_back("Avg");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      TableRow row{rows[r], RowKind::Data, {}};
      for (std::size_t k = 0; k < cols.size(); ++k) row.values.push_back(grid[r][k]->top1);
      row.values.push_back(detail::mean(row.values));
      t.rows.push_back(std::move(row));
    }
    const std::size_t data_rows = t.rows.size();
    for (std::size_t r = 1; r < data_rows; ++r) {
      TableRow d{"Δ " + rows[r] + " vs " + rows[0], RowKind::Delta, {}};
      for (std::size_t k = 0; k < t.columns.size(); ++k) d.values.push_back(t.rows[r].values[k] - t.rows[0].values[k]);
      t.rows.push_back(std::move(d));
    }
  } else {
    t.columns.push_back("Δ");
    std::vector<double> a, b, d;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double x = grid[r][0]->top1, y = grid[r][1]->top1;
      t.rows.push_back({rows[r], RowKind::Data, {x, y, y - x}});
      a.push_back(x);
      b.push_back(y);
      d.push_back(y - x);
    }
    t.rows.push_back({"Avg", RowKind::Average, {detail::mean(a), detail::mean(b), detail::mean(d)}});
  }
  return t;
}

inline std::string render_text(const Table& t) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({""});
  for (const auto& c : t.columns) cells.back().push_back(c);
  for (const auto& r : t.rows) {
    std::vector<std::string> line{r.label};
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const bool delta = r.kind == RowKind::Delta || (t.layout == Layout::Table6Like && k == 2);
      line.push_back(detail::percent(r.values[k], delta));
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(t.columns.size() + 1, 0);
  for (const auto& line : cells)
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], detail::display_width(line[k]));
  std::string out;
  for (const auto& line : cells) {
    std::string l;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k) l += "  ";
      l += detail::pad(line[k], width[k], k == 0);
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + "\n";
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Table& t) {
  nlohmann::ordered_json j;
  j["layout"] = std::string(to_string(t.layout));
  j["columns"] = t.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    const char* kind = r.kind == RowKind::Data ? "data" : r.kind == RowKind::Delta ? "delta" : "avg";
    rows.push_back({{"label", r.label}, {"kind", kind}, {"values", r.values}});
  }
  j["rows"] = std::move(rows);
  return j;
}

inline RenderedReport emit_report(const std::vector<ReportCell>& cells, Layout layout) {
  RenderedReport r;
  r.table = build_table(cells, layout);
  r.text = render_text(r.table);
  r.json = to_json(r.table);
  return r;
}

}  // namespace habitat::cli
