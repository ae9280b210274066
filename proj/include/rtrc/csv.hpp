#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rtrc {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// Strict full-string parse; returns false on trailing garbage.
bool parse_double(std::string_view s, double& out);

std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

}  // namespace rtrc
