#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace daema {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Comma-separated table with a header row. Fields may be double-quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column_index(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in, const std::string& source_name);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
void write_csv(std::ostream& out, const CsvTable& table);

// "NA", case-insensitive, surrounding whitespace ignored.
bool is_na_token(std::string_view cell);

// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view cell, double& out);

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace daema
