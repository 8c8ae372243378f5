#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbrsf {

// Shortest decimal text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
  if (s.empty()) throw std::runtime_error(what + ": empty value");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw std::runtime_error(what + ": not a number: '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("csv: no column named '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

// Plain comma-separated values, header row required, no quoting. Every row
// must have the header's field count; empty cells are kept and rejected by
// callers that require values.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF && !first) break;
    std::vector<std::string> fields;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(table.header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (first) throw std::runtime_error(path + ": missing header row");
  return table;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write file: " + path);
    path_ = path;
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  ~CsvWriter() { out_.flush(); }

private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace sbrsf
