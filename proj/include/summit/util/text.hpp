#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace summit::util {

/// Whitespace-separated token count. Word counts throughout the project are
/// defined this way, not via the topic-modeling tokenizer.
std::size_t count_words(std::string_view text);

/// Splits on runs of whitespace, preserving token order.
std::vector<std::string_view> split_whitespace(std::string_view text);

/// First max_words whitespace tokens rejoined with single spaces.
std::string first_words(std::string_view text, std::size_t max_words);

std::string trim(std::string_view s);

/// Shortest decimal form that round-trips the double (std::to_chars).
std::string format_double(double v);

/// Fixed-precision decimal, for SVG coordinates.
std::string format_fixed(double v, int precision);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::string to_lower_ascii(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

} // namespace summit::util
