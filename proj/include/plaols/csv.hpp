#pragma once

// Numeric CSV: first row holds column names, then one observation per row.
// Comma separated, decimal point, no quoting.

#include <iosfwd>
#include <string>
#include <vector>

#include "plaols/linalg.hpp"

namespace plaols {

struct CsvTable {
  std::vector<std::string> header;
  Matrix data;  // rows x header.size()

  /// Column index of `name`; throws InputFormat when absent.
  std::size_t column(const std::string& name) const;
};

/// Throws InputFormat naming the line (1-based, header is line 1) and column
/// of the first malformed cell. `source` only appears in messages.
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::string& path);

/// Values are printed with 17 significant digits so they re-read exactly.
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& data);

std::string format_double(double value);

}  // namespace plaols
