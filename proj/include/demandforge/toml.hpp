#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "demandforge/error.hpp"
#include "demandforge/numfmt.hpp"

namespace demandforge::toml {

// Reader for the TOML subset used by run configurations: tables, arrays of
// tables, dotted keys, basic and literal strings, integers, floats,
// booleans, arrays and inline tables. Dates and multi-line strings are
// rejected. Documents are returned as JSON values.

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    nlohmann::json parse() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* current = &root;
        for (;;) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                const bool array = text_.substr(pos_, 2) == "[[";
                pos_ += array ? 2 : 1;
                skip_ws();
                auto path = parse_key_path();
                skip_ws();
                expect(']');
                if (array) expect(']');
                current = array ? &open_array_table(root, path) : &open_table(root, path);
                end_of_line();
                continue;
            }
            auto path = parse_key_path();
            skip_ws();
            expect('=');
            skip_ws();
            assign(*current, path, parse_value());
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void error(const std::string& message) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
        fail(ErrorKind::ConfigError, "TOML line " + std::to_string(line) + ": " + message);
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }
    void expect(char c) {
        if (peek() != c) error(std::string("expected '") + c + "'");
        ++pos_;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }
    void skip_ws_comments_newlines() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
                continue;
            }
            return;
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') ++pos_;
        if (peek() != '\n') error("unexpected text after value");
        ++pos_;
    }

    std::string parse_key_part() {
        if (peek() == '"') return parse_basic_string();
        if (peek() == '\'') return parse_literal_string();
        std::string key;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key.push_back(c);
                ++pos_;
            } else {
                break;
            }
        }
        if (key.empty()) error("expected a key");
        return key;
    }

    std::vector<std::string> parse_key_path() {
        std::vector<std::string> path{parse_key_part()};
        for (;;) {
            skip_ws();
            if (peek() != '.') return path;
            ++pos_;
            skip_ws();
            path.push_back(parse_key_part());
        }
    }

    nlohmann::json& open_table(nlohmann::json& root, const std::vector<std::string>& path) {
        nlohmann::json* node = &root;
        for (const auto& part : path) {
            if (node->is_array()) node = &node->back();
            auto& child = (*node)[part];
            if (child.is_null()) child = nlohmann::json::object();
            if (!child.is_object() && !child.is_array()) error("key '" + part + "' is not a table");
            node = &child;
        }
        if (node->is_array()) node = &node->back();
        return *node;
    }

    nlohmann::json& open_array_table(nlohmann::json& root, const std::vector<std::string>& path) {
        std::vector<std::string> parent(path.begin(), path.end() - 1);
        nlohmann::json& table = open_table(root, parent);
        auto& arr = table[path.back()];
        if (arr.is_null()) arr = nlohmann::json::array();
        if (!arr.is_array()) error("key '" + path.back() + "' is not an array of tables");
        arr.push_back(nlohmann::json::object());
        return arr.back();
    }

    void assign(nlohmann::json& table, const std::vector<std::string>& path, nlohmann::json value) {
        nlohmann::json* node = &table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            auto& child = (*node)[path[i]];
            if (child.is_null()) child = nlohmann::json::object();
            if (!child.is_object()) error("key '" + path[i] + "' is not a table");
            node = &child;
        }
        if (node->contains(path.back())) error("duplicate key '" + path.back() + "'");
        (*node)[path.back()] = std::move(value);
    }

    std::string parse_basic_string() {
        expect('"');
        if (text_.substr(pos_, 2) == "\"\"") error("multi-line strings are not supported");
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') error("unterminated string");
            char c = text_[pos_++];
            if (c == '"') return out;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (eof()) error("unterminated escape");
            char e = text_[pos_++];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'u': {
                    if (pos_ + 4 > text_.size()) error("bad unicode escape");
                    unsigned cp = 0;
                    for (int i = 0; i < 4; ++i) {
                        char h = text_[pos_++];
                        cp <<= 4;
                        if (h >= '0' && h <= '9') cp |= static_cast<unsigned>(h - '0');
                        else if (h >= 'a' && h <= 'f') cp |= static_cast<unsigned>(h - 'a' + 10);
                        else if (h >= 'A' && h <= 'F') cp |= static_cast<unsigned>(h - 'A' + 10);
                        else error("bad unicode escape");
                    }
                    if (cp < 0x80) {
                        out.push_back(static_cast<char>(cp));
                    } else if (cp < 0x800) {
                        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                    } else {
                        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                    }
                    break;
                }
                default: error(std::string("unknown escape \\") + e);
            }
        }
    }

    std::string parse_literal_string() {
        expect('\'');
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') error("unterminated string");
            char c = text_[pos_++];
            if (c == '\'') return out;
            out.push_back(c);
        }
    }

    nlohmann::json parse_value() {
        const char c = peek();
        if (c == '"') return parse_basic_string();
        if (c == '\'') return parse_literal_string();
        if (c == '[') return parse_array();
        if (c == '{') return parse_inline_table();
        std::string token;
        while (!eof()) {
            char d = peek();
            if (d == ',' || d == ']' || d == '}' || d == '#' || d == '\n' || d == '\r' || d == ' ' || d == '\t') break;
            token.push_back(d);
            ++pos_;
        }
        if (token.empty()) error("expected a value");
        if (token == "true") return true;
        if (token == "false") return false;
        std::string digits;
        for (char d : token) {
            if (d != '_') digits.push_back(d);
        }
        if (digits == "inf" || digits == "+inf") return std::numeric_limits<double>::infinity();
        if (digits == "-inf") return -std::numeric_limits<double>::infinity();
        if (digits.find_first_of(".eE") == std::string::npos) {
            if (auto v = parse_int(digits)) return *v;
        } else if (auto v = parse_double(digits)) {
            return *v;
        }
        error("cannot parse value '" + token + "'");
    }

    nlohmann::json parse_array() {
        expect('[');
        nlohmann::json arr = nlohmann::json::array();
        for (;;) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() != ']') error("expected ',' or ']' in array");
        }
    }

    nlohmann::json parse_inline_table() {
        expect('{');
        nlohmann::json table = nlohmann::json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return table;
        }
        for (;;) {
            skip_ws();
            auto path = parse_key_path();
            skip_ws();
            expect('=');
            skip_ws();
            assign(table, path, parse_value());
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return table;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline nlohmann::json parse(std::string_view text) { return Parser(text).parse(); }

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::IoError, "cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

}  // namespace demandforge::toml
