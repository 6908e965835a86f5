#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace summit::util {

/// Flat `key = value` file with [section] headers. `#` and `;` start
/// comments. Values keep internal whitespace; surrounding whitespace is
/// trimmed. Keys are addressed as "section.key".
class IniFile {
public:
    static IniFile parse(const std::string& content);
    static IniFile load(const std::filesystem::path& path);

    bool has(const std::string& dotted_key) const;
    std::string get(const std::string& dotted_key, const std::string& fallback) const;
    std::string require(const std::string& dotted_key) const;

    double get_double(const std::string& dotted_key, double fallback) const;
    long long get_int(const std::string& dotted_key, long long fallback) const;
    bool get_bool(const std::string& dotted_key, bool fallback) const;

    /// Comma-separated list value.
    std::vector<std::string> get_list(const std::string& dotted_key) const;

    /// All keys present in the file, in file order.
    const std::vector<std::string>& keys() const { return ordered_keys_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> ordered_keys_;
};

} // namespace summit::util
