#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace telerank {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Minimal reader for the unquoted comma-separated files this project
// exchanges (ids never contain commas).
class CsvTable {
 public:
  static CsvTable read(std::istream& in);
  static CsvTable read_file(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> line_numbers_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace telerank
