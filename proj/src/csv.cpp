#include "levopt/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace levopt::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_field(const std::string& field, std::size_t line_no,
                   std::size_t col) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error("csv: line " + std::to_string(line_no) +
                             ", column " + std::to_string(col + 1) +
                             ": not a number: '" + field + "'");
  return value;
}

}  // namespace

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw std::out_of_range("csv: no column named '" + name + "'");
}

Table parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  Table table;
  table.header = split_line(strip_cr(line));
  if (table.header.size() == 1 && table.header.front().empty())
    throw std::runtime_error("csv: empty header row");
  table.columns.resize(table.header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() && in.eof()) break;  // trailing newline
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != table.header.size())
      throw std::runtime_error(
          "csv: line " + std::to_string(line_no) + ": expected " +
          std::to_string(table.header.size()) + " fields, got " +
          std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c)
      table.columns[c].push_back(parse_field(fields[c], line_no, c));
  }
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Table read_file(const std::string& path,
                const std::vector<std::string>& expected_header) {
  Table table = read_file(path);
  if (table.header != expected_header) {
    std::string want;
    for (const auto& h : expected_header)
      want += (want.empty() ? "" : ",") + h;
    std::string got;
    for (const auto& h : table.header) got += (got.empty() ? "" : ",") + h;
    throw std::runtime_error("csv: '" + path + "': expected header '" + want +
                             "', got '" + got + "'");
  }
  return table;
}

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<const std::vector<double>*>& columns) {
  if (header.size() != columns.size())
    throw std::invalid_argument("csv: header/column count mismatch");
  std::size_t n_rows = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c == 0)
      n_rows = columns[c]->size();
    else if (columns[c]->size() != n_rows)
      throw std::invalid_argument("csv: ragged columns");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << format_double((*columns[c])[r]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed for '" + path + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("csv: format failure");
  return std::string(buf, ptr);
}

}  // namespace levopt::csv
