#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perfimpact::csv {

using Row = std::vector<std::string>;

// RFC 4180 quoting: fields containing ',', '"', CR or LF are quoted with
// embedded quotes doubled. Rows end with '\n'.
std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);

// Reads every record; quoted fields may span lines. Accepts "\r\n" endings.
std::vector<Row> read_all(std::istream& in);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
// Fixed number of significant digits ("%.*g").
std::string format_double(double value, int significant_digits);

// Strict parse of the whole field; throws InvalidArgument.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace perfimpact::csv
