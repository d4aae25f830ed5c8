#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hero/dataset/dataset.hpp"
#include "hero/errors.hpp"

namespace hero::data {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline void write_double(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

}  // namespace detail

/// Parses CSV text whose header names the schema columns in any order. Extra
/// columns are ignored. Errors carry 1-based line and column numbers.
inline TimeSeriesDataset read_csv(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV: missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split(line);

  std::vector<std::size_t> source(schema.size());
  for (std::size_t s = 0; s < schema.size(); ++s) {
    auto it = std::find(header.begin(), header.end(), schema[s].name);
    if (it == header.end()) throw SchemaError("missing column '" + schema[s].name + "'");
    source[s] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    for (std::size_t s = 0; s < schema.size(); ++s) {
      double v = 0.0;
      if (!detail::parse_double(cells[source[s]], v))
        throw CellError(line_no, source[s] + 1, "cannot parse '" + std::string(cells[source[s]]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  return TimeSeriesDataset(schema, from_rows(rows, schema.size(), values), Stage::kRaw);
}

inline TimeSeriesDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");
  return read_csv(in, schema);
}

inline void write_csv(std::ostream& os, const TimeSeriesDataset& ds) {
  for (std::size_t c = 0; c < ds.width(); ++c) os << (c ? "," : "") << ds.schema()[c].name;
  os << '\n';
  for (Eigen::Index r = 0; r < ds.rows().rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.rows().cols(); ++c) {
      if (c) os << ',';
      detail::write_double(os, ds.rows()(r, c));
    }
    os << '\n';
  }
}

inline void save_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write CSV file '" + path.string() + "'");
  write_csv(os, ds);
}

}  // namespace hero::data
