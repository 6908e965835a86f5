#include "summit/util/csv.hpp"

#include <stdexcept>

namespace summit::util {

std::string csv_escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    std::size_t record_no = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        ++record_no;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else {
            switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw std::runtime_error("malformed CSV: stray quote in record " +
                                             std::to_string(record_no));
                }
                in_quotes = true;
                field_was_quoted = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                if (field_was_quoted) {
                    throw std::runtime_error("malformed CSV: text after closing quote in record " +
                                             std::to_string(record_no));
                }
                field.push_back(c);
            }
        }
    }
    if (in_quotes) {
        throw std::runtime_error("malformed CSV: unterminated quote in record " +
                                 std::to_string(record_no));
    }
    if (!field.empty() || field_was_quoted || !row.empty()) {
        end_record();
    }
    return rows;
}

} // namespace summit::util
