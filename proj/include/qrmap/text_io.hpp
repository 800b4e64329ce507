#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrmap {

/// Shortest round-trip decimal representation (locale independent).
std::string format_double(double value);

/// Strict parse of a whole field as a double; returns false on failure.
bool parse_double(std::string_view text, double& out);

std::string_view trim(std::string_view text);

/// Splits one CSV record on commas. Double-quoted fields may contain commas
/// and doubled quotes.
std::vector<std::string> split_csv_record(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace qrmap
