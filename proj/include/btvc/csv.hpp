#pragma once

// Minimal CSV handling for the file formats this project defines: comma
// separation, no quoting, first line is the header. Errors carry 1-based
// line numbers.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "btvc/errors.hpp"

namespace btvc::csv {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

inline double parse_double(const std::string& field, long line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw SchemaError("not a number: '" + field + "' on line " +
                          std::to_string(line),
                      line);
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw fields
  std::vector<long> line_numbers;              // 1-based source lines
};

/// Reads a rectangular CSV; a ragged row is a schema error naming its line.
inline Table read_table(std::istream& is, const std::string& what) {
  Table t;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw SchemaError(what + ": ragged row on line " +
                            std::to_string(lineno) + " (expected " +
                            std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(fields.size()) + ")",
                        lineno);
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw SchemaError(what + ": empty file");
  return t;
}

inline Table read_table_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open file: " + path);
  return read_table(f, path);
}

}  // namespace btvc::csv
