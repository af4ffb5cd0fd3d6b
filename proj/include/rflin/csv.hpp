#pragma once

#include <string>
#include <vector>

namespace rflin {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Floats with 10 significant digits; NaN is written as an empty cell.
std::string csv_number(double x);

/// Header line, then one line per row, LF endings. Throws
/// std::invalid_argument when a row's width differs from the header's.
std::string write_csv(const CsvTable& table);

/// Minimal reader for what write_csv emits (no quoting).
CsvTable read_csv(const std::string& text);

}  // namespace rflin
