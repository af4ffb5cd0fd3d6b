#include "rflin/csv.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace rflin {

std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  return fmt::format("{:.10g}", x);
}

namespace {
void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}
}  // namespace

std::string write_csv(const CsvTable& table) {
  std::string out;
  append_line(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument(fmt::format("csv: row has {} cells, header has {}", row.size(), table.header.size()));
    append_line(out, row);
  }
  return out;
}

CsvTable read_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      table.header = split_line(line);
      first = false;
    } else if (!line.empty()) {
      table.rows.push_back(split_line(line));
    }
  }
  return table;
}

}  // namespace rflin
