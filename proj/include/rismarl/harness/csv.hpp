#pragma once

// Minimal CSV reading and writing. Numbers are written with "%.10g" so that
// output bytes depend only on the values.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rismarl/common.hpp"

namespace rismarl::harness {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("csv: missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(std::istream& in, const std::string& source = "csv") {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
  t.header = split_csv_line(line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return read_csv(f, path);
}

}  // namespace rismarl::harness
