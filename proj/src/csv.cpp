#include "plaols/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

#include "plaols/error.hpp"

namespace plaols {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::InputFormat, source + ": line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::InputFormat, "no column named '" + name + "'");
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      std::set<std::string> seen;
      for (std::size_t j = 0; j < fields.size(); ++j) {
        if (fields[j].empty()) fail(source, line_no, "column " + std::to_string(j + 1) + " has an empty name");
        std::string name(fields[j]);
        if (!seen.insert(name).second) fail(source, line_no, "duplicate column name '" + name + "'");
        table.header.push_back(std::move(name));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(source, line_no,
           "expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = fields[j];
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (!f.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[j]);
      if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[j])) {
        fail(source, line_no,
             "column " + std::to_string(j + 1) + " ('" + table.header[j] + "'): '" + std::string(f) +
                 "' is not a finite number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw Error(ErrorKind::InputFormat, source + ": read error");
  if (!have_header) throw Error(ErrorKind::InputFormat, source + ": empty file, expected a header row");

  table.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InputFormat, "cannot open '" + path + "'");
  return parse_csv(in, path);
}

std::string format_double(double value) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& data) {
  if (static_cast<Eigen::Index>(header.size()) != data.cols()) {
    throw Error(ErrorKind::InvalidArgument, "csv header and data widths differ");
  }
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data(i, j));
    out << '\n';
  }
}

}  // namespace plaols
