#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "demandforge/error.hpp"

namespace demandforge::csv {

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based physical line where the record starts
};

// RFC-4180 reader: comma separator, double-quote quoting with "" escapes,
// CRLF or LF line endings, quoted fields may span lines.
inline std::vector<Record> read(std::istream& in) {
    std::vector<Record> records;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

    Record current;
    std::string field;
    std::size_t line = 1;
    current.line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_has_content = false;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        if (record_has_content || !current.fields.empty()) {
            end_field();
            records.push_back(std::move(current));
        }
        current = Record{};
        field.clear();
        field_was_quoted = false;
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": stray quote inside field");
                }
                in_quotes = true;
                field_was_quoted = true;
                record_has_content = true;
                break;
            case ',':
                record_has_content = true;
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                current.line = line;
                break;
            default:
                if (field_was_quoted) {
                    fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": text after closing quote");
                }
                field.push_back(c);
                record_has_content = true;
        }
    }
    if (in_quotes) fail(ErrorKind::ParseError, "line " + std::to_string(current.line) + ": unterminated quoted field");
    end_record();
    return records;
}

inline std::string quote(std::string_view value) {
    bool needs = value.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

}  // namespace demandforge::csv
