#include "summit/util/ini.hpp"

#include "summit/util/fsio.hpp"
#include "summit/util/text.hpp"

#include <sstream>
#include <stdexcept>

namespace summit::util {

IniFile IniFile::parse(const std::string& content) {
    IniFile ini;
    std::istringstream in(content);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unterminated section header");
            }
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        }
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        }
        std::string dotted = section.empty() ? key : section + "." + key;
        if (!ini.values_.count(dotted)) ini.ordered_keys_.push_back(dotted);
        ini.values_[dotted] = value;
    }
    return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

bool IniFile::has(const std::string& dotted_key) const {
    return values_.count(dotted_key) > 0;
}

std::string IniFile::get(const std::string& dotted_key, const std::string& fallback) const {
    auto it = values_.find(dotted_key);
    return it == values_.end() ? fallback : it->second;
}

std::string IniFile::require(const std::string& dotted_key) const {
    auto it = values_.find(dotted_key);
    if (it == values_.end()) {
        throw std::runtime_error("config: missing required key '" + dotted_key + "'");
    }
    return it->second;
}

double IniFile::get_double(const std::string& dotted_key, double fallback) const {
    auto it = values_.find(dotted_key);
    if (it == values_.end()) return fallback;
    double v;
    if (!parse_double(it->second, v)) {
        throw std::runtime_error("config: key '" + dotted_key + "' is not a number: " +
                                 it->second);
    }
    return v;
}

long long IniFile::get_int(const std::string& dotted_key, long long fallback) const {
    auto it = values_.find(dotted_key);
    if (it == values_.end()) return fallback;
    long long v;
    if (!parse_int(it->second, v)) {
        throw std::runtime_error("config: key '" + dotted_key + "' is not an integer: " +
                                 it->second);
    }
    return v;
}

bool IniFile::get_bool(const std::string& dotted_key, bool fallback) const {
    auto it = values_.find(dotted_key);
    if (it == values_.end()) return fallback;
    std::string v = to_lower_ascii(it->second);
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw std::runtime_error("config: key '" + dotted_key + "' is not a boolean: " + it->second);
}

std::vector<std::string> IniFile::get_list(const std::string& dotted_key) const {
    std::vector<std::string> out;
    auto it = values_.find(dotted_key);
    if (it == values_.end()) return out;
    std::string_view rest = it->second;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        std::string_view item = rest.substr(0, comma);
        std::string trimmed = trim(item);
        if (!trimmed.empty()) out.push_back(trimmed);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

} // namespace summit::util
