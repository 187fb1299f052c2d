#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace uda {

// Shortest decimal form that parses back to the identical double.
std::string format_real(double value);

// Full-token parse; nullopt on any trailing garbage or a non-finite result.
std::optional<double> parse_real(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace uda
