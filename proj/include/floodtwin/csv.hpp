#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace floodtwin {

// Minimal comma-separated reader: no quoting, blank lines skipped, first row is the header.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  struct Row {
    std::size_t line;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;

  // Index of a header column; ParseError naming the file if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Field parsers that throw ParseError with the row's line number.
double csv_double(const CsvTable& t, const CsvTable::Row& row, std::size_t col);
long long csv_integer(const CsvTable& t, const CsvTable::Row& row, std::size_t col);

}  // namespace floodtwin
