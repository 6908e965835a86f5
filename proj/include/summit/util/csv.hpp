#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace summit::util {

/// RFC 4180 style: fields containing comma, quote or newline are quoted and
/// inner quotes doubled.
std::string csv_escape(std::string_view field);

std::string csv_join(const std::vector<std::string>& fields);

/// Parses one CSV document. Handles quoted fields spanning newlines. Throws
/// std::runtime_error with the offending record number on malformed input.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

} // namespace summit::util
