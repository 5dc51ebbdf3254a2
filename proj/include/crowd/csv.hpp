#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowd::csv {

// Splits one line. Handles quoted fields with "" escapes; returns nullopt on an
// unterminated quote. A trailing '\r' is dropped.
std::optional<std::vector<std::string>> split(std::string_view line);

std::string quote(std::string_view field);  // quotes only when needed

// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);

std::string trim(std::string_view s);
std::string lower(std::string_view s);

}  // namespace crowd::csv
