#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netsurv::csv {

/// Split one CSV record on ','. Double-quoted fields may contain commas and
/// "" escapes. Surrounding whitespace of unquoted fields is trimmed.
std::vector<std::string> split_record(std::string_view line);

std::string_view trim(std::string_view s);

/// Strict decimal parse ('.' separator, no thousands separators, whole field).
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

/// Shortest representation that round-trips.
std::string format_double(double x);

/// Quote a field if it needs it.
std::string escape(std::string_view field);

} // namespace netsurv::csv
