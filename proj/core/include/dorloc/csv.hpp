#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dor {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

/// Minimal CSV table: '#'-prefixed comment lines, a header row, then data
/// rows. Fields never contain commas, so no quoting is needed.
struct CsvTable {
  std::vector<std::string> comments;  // without leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

double parse_double(const std::string& field);

}  // namespace dor
