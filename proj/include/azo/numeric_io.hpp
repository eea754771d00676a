// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace azo {

// Shortest decimal form that round-trips the exact double.
std::string format_double(double value);

// Strict double parser; throws ConfigError on trailing garbage.
double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view text);

}  // namespace azo
