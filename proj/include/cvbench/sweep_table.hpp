#pragma once

// Figure data as a numeric table with `#` metadata lines.

#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvbench/error.hpp"
#include "cvbench/numeric.hpp"

namespace cvbench {

struct SweepTable {
  std::vector<std::pair<std::string, std::string>> metadata;  // emitted in insertion order
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void set_meta(std::string key, std::string value) {
    for (auto& [k, v] : metadata) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    metadata.emplace_back(std::move(key), std::move(value));
  }

  [[nodiscard]] const std::string* meta(std::string_view key) const {
    for (const auto& [k, v] : metadata) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  [[nodiscard]] std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw InvalidArgument("no column named " + std::string(name));
  }

  [[nodiscard]] std::vector<double> column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(j));
    return out;
  }

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size()) {
      throw DimensionMismatch("row has " + std::to_string(row.size()) + " cells, table has " +
                              std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
  }

  /// `# key=value` lines, header, rows; LF endings, shortest round-trip floats.
  [[nodiscard]] std::string to_csv() const {
    std::string s;
    for (const auto& [k, v] : metadata) s += "# " + k + "=" + v + "\n";
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) s += ',';
      s += columns[j];
    }
    s += '\n';
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (j) s += ',';
        s += format_double(r[j]);
      }
      s += '\n';
    }
    return s;
  }

  static SweepTable from_csv(std::string_view text) {
    SweepTable t;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      const std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      if (line.empty()) continue;
      if (line.front() == '#') {
        if (have_header) throw InvalidArgument("metadata line after the header");
        std::string_view body = line.substr(1);
        if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument("metadata line without '='");
        t.metadata.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
        continue;
      }
      std::vector<std::string_view> cells;
      std::size_t c = 0;
      while (true) {
        const std::size_t comma = line.find(',', c);
        cells.push_back(line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c));
        if (comma == std::string_view::npos) break;
        c = comma + 1;
      }
      if (!have_header) {
        for (auto cell : cells) t.columns.emplace_back(cell);
        have_header = true;
        continue;
      }
      std::vector<double> row;
      row.reserve(cells.size());
      for (auto cell : cells) row.push_back(parse_double(cell));
      t.add_row(std::move(row));
    }
    if (!have_header) throw InvalidArgument("table has no header row");
    return t;
  }
};

}  // namespace cvbench
