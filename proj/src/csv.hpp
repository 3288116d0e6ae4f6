#pragma once

// Minimal CSV reading for the fixed-schema files this project exchanges.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridtopo::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

/// Reads a comma-separated file whose header must equal `expected_header`.
/// Blank lines are skipped. Every row must have header.size() fields.
Table read(const std::filesystem::path& file,
           const std::vector<std::string>& expected_header);

std::vector<std::string> split(std::string_view line);

std::size_t parse_index(std::string_view text, const std::string& where);
double parse_real(std::string_view text, const std::string& where);

/// Shortest decimal that round-trips to the same double.
std::string format_real(double value);

}  // namespace gridtopo::csv
