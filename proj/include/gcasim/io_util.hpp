#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcasim/common.hpp"

namespace gcasim {

// Splits one CSV record on commas. No quoting support: the formats used by
// this tool never embed commas in fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole text file; throws ParseError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Writes text atomically enough for our purposes (truncate + write).
void write_text_file(const std::filesystem::path& path, const std::string& content);

double parse_double_field(const std::string& field, const char* what, std::size_t line_no);
std::int64_t parse_int_field(const std::string& field, const char* what, std::size_t line_no);

}  // namespace gcasim
