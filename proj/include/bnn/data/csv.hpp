#ifndef BNN_DATA_CSV_HPP
#define BNN_DATA_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

/// Numeric table as read from disk.
struct RawTable {
  std::vector<std::string> columns;
  Matrix values;  // rows x columns
  std::size_t target = 0;
  std::size_t rejected_rows = 0;  // rows dropped for missing cells

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t feature_count() const noexcept { return columns.empty() ? 0 : columns.size() - 1; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c != target) out.push_back(columns[c]);
    }
    return out;
  }

  Matrix features() const {
    Matrix X(values.rows(), static_cast<Eigen::Index>(feature_count()));
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c != target) X.col(j++) = values.col(static_cast<Eigen::Index>(c));
    }
    return X;
  }

  Vector targets() const { return values.col(static_cast<Eigen::Index>(target)); }
};

struct CsvOptions {
  /// Target column by name; empty means the last column.
  std::string target;
  /// 0 picks ',' when the header contains one and whitespace otherwise.
  char delimiter = 0;
  std::optional<std::size_t> expected_rows;
  std::optional<std::size_t> expected_features;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Splits a line into (cell, 1-based starting column) pairs.
inline std::vector<std::pair<std::string_view, std::size_t>> split_cells(std::string_view line, char delim) {
  std::vector<std::pair<std::string_view, std::size_t>> cells;
  if (delim == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      cells.emplace_back(line.substr(i, j - i), i + 1);
      i = j;
    }
    return cells;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    const auto end = pos == std::string_view::npos ? line.size() : pos;
    cells.emplace_back(trim(line.substr(start, end - start)), start + 1);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "?" || s == "nan" || s == "NaN";
}

}  // namespace detail

/// Parses CSV text. `source` names the input in error messages.
inline RawTable parse_csv(std::istream& in, const std::string& source, const CsvOptions& options = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = line;
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::validation, source + ": empty file (no header)");
  const char delim = options.delimiter ? options.delimiter : (header.find(',') != std::string::npos ? ',' : ' ');

  RawTable table;
  for (auto [cell, col] : detail::split_cells(header, delim)) {
    if (cell.empty()) throw ParseError(source, line_no, col, "empty column name");
    table.columns.emplace_back(cell);
  }
  const std::size_t ncol = table.columns.size();
  if (ncol < 2) throw ParseError(source, line_no, 1, "need at least one feature and a target column");
  if (options.target.empty()) {
    table.target = ncol - 1;
  } else {
    bool found = false;
    for (std::size_t c = 0; c < ncol; ++c) {
      if (table.columns[c] == options.target) {
        table.target = c;
        found = true;
      }
    }
    if (!found) throw Error(ErrorKind::validation, source + ": target column '" + options.target + "' not in header");
  }

  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_cells(line, delim);
    if (cells.size() != ncol) {
      throw ParseError(source, line_no, cells.empty() ? 1 : cells.back().second,
                       "expected " + std::to_string(ncol) + " cells, found " + std::to_string(cells.size()));
    }
    bool missing = false;
    std::vector<double> row(ncol);
    for (std::size_t c = 0; c < ncol; ++c) {
      const auto [cell, col] = cells[c];
      if (detail::is_missing(cell)) {
        missing = true;
        continue;
      }
      if (!detail::parse_double(cell, row[c])) {
        throw ParseError(source, line_no, col, "non-numeric cell '" + std::string(cell) + "'");
      }
    }
    if (missing) {
      ++table.rejected_rows;
      continue;
    }
    flat.insert(flat.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::validation, source + ": table has a header but no data rows");
  table.values = Eigen::Map<RowMatrix>(flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncol));

  if (options.expected_rows && *options.expected_rows != rows) {
    throw Error(ErrorKind::validation, source + ": expected " + std::to_string(*options.expected_rows) +
                                           " rows, found " + std::to_string(rows));
  }
  if (options.expected_features && *options.expected_features != ncol - 1) {
    throw Error(ErrorKind::validation, source + ": expected " + std::to_string(*options.expected_features) +
                                           " features, found " + std::to_string(ncol - 1));
  }
  return table;
}

inline RawTable load_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return parse_csv(in, path, options);
}

inline RawTable parse_csv_string(const std::string& text, const CsvOptions& options = {}) {
  std::istringstream in(text);
  return parse_csv(in, "<string>", options);
}

}  // namespace bnn

#endif  // BNN_DATA_CSV_HPP
