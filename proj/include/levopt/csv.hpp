#pragma once

#include <string>
#include <vector>

namespace levopt::csv {

// Strict CSV dialect used at every file boundary: comma separated, mandatory
// header row, '.' decimal point, UTF-8, LF line endings on output.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t n_rows() const {
    return columns.empty() ? 0 : columns.front().size();
  }
  const std::vector<double>& column(const std::string& name) const;
};

Table read_file(const std::string& path);
Table parse(const std::string& text);

// Requires exactly the given header (used when a file format is pinned).
Table read_file(const std::string& path,
                const std::vector<std::string>& expected_header);

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<const std::vector<double>*>& columns);

std::string format_double(double v);  // shortest round-trip representation

}  // namespace levopt::csv
