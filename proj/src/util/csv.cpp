#include "telerank/util/csv.hpp"

#include <charconv>
#include <fstream>

namespace telerank {

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

CsvTable CsvTable::read(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (table.header_.empty()) {
      table.header_ = std::move(cells);
      continue;
    }
    if (cells.size() != table.header_.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header_.size()) +
                     " fields, got " + std::to_string(cells.size()));
    }
    table.rows_.push_back(std::move(cells));
    table.line_numbers_.push_back(line_no);
  }
  if (table.header_.empty()) throw CsvError("missing header line");
  return table;
}

CsvTable CsvTable::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());
  return read(in);
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw CsvError("missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw CsvError("line " + std::to_string(line_numbers_[row]) + ": not a number: '" + s + "'");
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw CsvError("line " + std::to_string(line_numbers_[row]) + ": not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace telerank
