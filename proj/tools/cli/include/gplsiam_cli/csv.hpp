#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gplsiam::cli {

// User-facing input problem; the tool exits with status 1.
class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 when absent
  long column(std::string_view name) const;
  // Throws CliError naming the column.
  std::size_t require(std::string_view name) const;
  std::size_t num_rows() const noexcept { return rows.size(); }
};

// Comma separated, header required, double-quoted fields may contain commas.
Table parse_csv(std::istream& in, const std::string& source);
Table read_csv(const std::string& path);

// Empty, NA, NaN (any case) and "." count as missing.
bool is_missing(std::string_view cell);

// Throws CliError with the source position.
double parse_number(std::string_view cell, const Table& table, std::size_t row, std::size_t col);

std::string format_double(double x);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace gplsiam::cli
