#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace catembed::csv {

/// Parsed CSV: header row plus data rows, all as strings. RFC-4180 style
/// quoting ("" escapes a quote inside a quoted field); no multiline fields.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text);

std::string escape_field(const std::string& field);

/// Doubles are written with 17 significant digits, enough to round-trip
/// IEEE binary64 exactly.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const Table& table);

}  // namespace catembed::csv
