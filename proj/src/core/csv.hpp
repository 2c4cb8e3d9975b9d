#pragma once

#include <string>
#include <vector>

namespace obdet {

// Shortest round-trip decimal form (std::to_chars); NaN becomes "nan".
// Used everywhere a float reaches a report so output bytes are deterministic.
std::string format_double(double v);

double parse_double(const std::string& text);
long parse_long(const std::string& text);

// Minimal CSV: our fields never need quoting, so none is implemented and
// writing a field containing a delimiter is an error.
std::string join_csv_row(const std::vector<std::string>& fields);
std::vector<std::string> split_csv_row(const std::string& line);

// Splits into non-empty lines, tolerating a trailing newline and CRLF.
std::vector<std::string> split_lines(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace obdet
