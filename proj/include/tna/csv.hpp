#pragma once

#include <istream>
#include <string>
#include <vector>

namespace tna {

/// Minimal delimiter-separated table: header row plus data rows. Fields may
/// be double-quoted; a doubled quote inside a quoted field is an escape.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by header name, -1 when absent.
  int column(const std::string& name) const;
};

/// Reads the whole stream. Rows whose field count differs from the header
/// raise a data error carrying the 1-based line number.
CsvTable read_csv(std::istream& in, char delimiter);

CsvTable read_csv_file(const std::string& path, char delimiter);

}  // namespace tna
