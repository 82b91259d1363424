#ifndef PUSHRANK_CSV_HPP
#define PUSHRANK_CSV_HPP

#include <string>
#include <vector>

namespace pushrank::csv {

// Plain comma-separated tables, UTF-8, no quoting. Empty field = missing.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_line(const std::string& line);

Table read_table(const std::string& path);

// Formats a double so that parsing it back recovers the exact bits.
std::string format_double(double v);

// Strict double parse of a whole field; throws Error with `context` on failure.
double parse_double(const std::string& field, const std::string& context);

void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace pushrank::csv

#endif
