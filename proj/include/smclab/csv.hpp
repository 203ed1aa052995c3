#pragma once

// Run CSV layout: t, then per node x, v, u, alpha, beta, s, V, then d.
// Single-node runs use bare column names; networks suffix them _1 .. _N.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "smclab/errors.hpp"
#include "smclab/sim.hpp"

namespace smclab {

inline constexpr const char* kNodeColumns[] = {"x",    "v", "u", "alpha",
                                               "beta", "s", "V"};

/// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline std::vector<std::string> csv_columns(std::size_t nodes) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < nodes; ++i) {
    for (const char* c : kNodeColumns) {
      cols.push_back(nodes == 1 ? std::string(c)
                                : std::string(c) + "_" + std::to_string(i + 1));
    }
  }
  cols.emplace_back("d");
  return cols;
}

inline void write_csv(std::ostream& os, const TimeSeries& ts) {
  const auto cols = csv_columns(ts.nodes.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    os << (c ? "," : "") << cols[c];
  }
  os << '\n';
  std::string line;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    line = format_double(ts.t[k]);
    for (const auto& nt : ts.nodes) {
      for (const auto* col : {&nt.x, &nt.v, &nt.u, &nt.alpha, &nt.beta, &nt.s,
                              &nt.V}) {
        line += ',';
        line += format_double((*col)[k]);
      }
    }
    line += ',';
    line += format_double(ts.d[k]);
    line += '\n';
    os << line;
  }
}

/// Column-major view of a CSV file with a header row.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>* find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return &columns[i];
    }
    return nullptr;
  }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) {
    fail(ErrorKind::InvalidInput, "CSV is empty");
  }
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.names.push_back(cell);
  }
  table.columns.resize(table.names.size());
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::size_t col = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end && col < table.names.size()) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc{} || res.ptr != comma) {
        fail(ErrorKind::InvalidInput,
             "CSV row " + std::to_string(row) + ": bad number in column '" +
                 table.names[col] + "'");
      }
      table.columns[col++].push_back(v);
      p = comma + 1;
    }
    if (col != table.names.size() || p <= end) {
      fail(ErrorKind::InvalidInput,
           "CSV row " + std::to_string(row) + ": expected " +
               std::to_string(table.names.size()) + " columns");
    }
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
  return read_csv(in);
}

}  // namespace smclab
