#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reqgen {

// Minimal CSV support: comma separator, double-quote escaping only when a
// cell contains a comma, quote, or newline. Good enough for the formats this
// tool reads and writes; not a general CSV library.
namespace csv {

using Row = std::vector<std::string>;

// Parses the whole text. Empty trailing line is ignored; blank lines in the
// middle become single empty cells.
std::vector<Row> parse(const std::string& text);

std::vector<Row> read_file(const std::string& path);

std::string escape(const std::string& cell);

std::string join_row(const Row& row);

void write_file(const std::string& path, const std::vector<Row>& rows);

// Round-trip-exact formatting for doubles (shortest form), plain decimal for
// integers. Used everywhere a number lands in a CSV cell.
std::string format_double(double v);
std::string format_int(std::int64_t v);

// Strict numeric parses; throw Errc::parse_error on garbage.
double parse_double(const std::string& cell, const std::string& what);
std::int64_t parse_int(const std::string& cell, const std::string& what);

}  // namespace csv

}  // namespace reqgen
