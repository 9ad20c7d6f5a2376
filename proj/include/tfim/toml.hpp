#pragma once

// Minimal TOML-subset reader covering what the experiment configs use:
// [section] tables, key = value lines, # comments, and values that are
// strings, booleans, integers, floats, or flat arrays thereof.

#include <cctype>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tfim::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::int64_t, double, bool, std::string, Array> v;

    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_float() const { return std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }

    std::int64_t as_int() const {
        if (!is_int()) throw std::runtime_error("expected integer");
        return std::get<std::int64_t>(v);
    }
    double as_double() const {
        if (is_int()) return static_cast<double>(std::get<std::int64_t>(v));
        if (!is_float()) throw std::runtime_error("expected number");
        return std::get<double>(v);
    }
    bool as_bool() const {
        if (!is_bool()) throw std::runtime_error("expected boolean");
        return std::get<bool>(v);
    }
    const std::string& as_string() const {
        if (!is_string()) throw std::runtime_error("expected string");
        return std::get<std::string>(v);
    }
    const Array& as_array() const {
        if (!is_array()) throw std::runtime_error("expected array");
        return std::get<Array>(v);
    }
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;

namespace detail {

inline void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline Value parse_scalar(const std::string& raw, int line);

inline Value parse_value(const std::string& s, size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) throw std::runtime_error("missing value at line " + std::to_string(line));
    if (s[i] == '[') {
        ++i;
        Array arr;
        while (true) {
            skip_ws(s, i);
            if (i < s.size() && s[i] == ']') {
                ++i;
                break;
            }
            arr.push_back(parse_value(s, i, line));
            skip_ws(s, i);
            if (i < s.size() && s[i] == ',') {
                ++i;
                continue;
            }
            if (i < s.size() && s[i] == ']') {
                ++i;
                break;
            }
            throw std::runtime_error("malformed array at line " + std::to_string(line));
        }
        return Value{arr};
    }
    if (s[i] == '"') {
        std::string out;
        ++i;
        while (i < s.size() && s[i] != '"') {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                char c = s[i];
                out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
            } else {
                out.push_back(s[i]);
            }
            ++i;
        }
        if (i >= s.size()) throw std::runtime_error("unterminated string at line " + std::to_string(line));
        ++i;
        return Value{out};
    }
    size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' && s[i] != ' ' &&
           s[i] != '\t')
        ++i;
    return parse_scalar(s.substr(start, i - start), line);
}

inline Value parse_scalar(const std::string& raw, int line) {
    if (raw == "true") return Value{true};
    if (raw == "false") return Value{false};
    if (raw.empty()) throw std::runtime_error("empty value at line " + std::to_string(line));
    bool looks_float = raw.find_first_of(".eE") != std::string::npos &&
                       raw.find_first_not_of("+-0123456789.eE") == std::string::npos;
    try {
        size_t used = 0;
        if (!looks_float) {
            std::int64_t n = std::stoll(raw, &used);
            if (used == raw.size()) return Value{n};
        }
        double d = std::stod(raw, &used);
        if (used == raw.size()) return Value{d};
    } catch (...) {
    }
    throw std::runtime_error("cannot parse value '" + raw + "' at line " + std::to_string(line));
}

}  // namespace detail

inline Document parse(const std::string& text) {
    Document doc;
    std::string section;
    size_t pos = 0;
    int line = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string s = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line;
        size_t i = 0;
        detail::skip_ws(s, i);
        if (i >= s.size() || s[i] == '#') continue;
        if (s[i] == '[') {
            size_t close = s.find(']', i);
            if (close == std::string::npos)
                throw std::runtime_error("unterminated section at line " + std::to_string(line));
            section = s.substr(i + 1, close - i - 1);
            if (section.empty())
                throw std::runtime_error("empty section name at line " + std::to_string(line));
            doc[section];
            continue;
        }
        size_t eq = s.find('=', i);
        if (eq == std::string::npos)
            throw std::runtime_error("expected key = value at line " + std::to_string(line));
        std::string key = s.substr(i, eq - i);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        if (key.empty()) throw std::runtime_error("empty key at line " + std::to_string(line));
        size_t vi = eq + 1;
        Value v = detail::parse_value(s, vi, line);
        detail::skip_ws(s, vi);
        if (vi < s.size() && s[vi] != '#')
            throw std::runtime_error("trailing characters at line " + std::to_string(line));
        doc[section][key] = std::move(v);
    }
    return doc;
}

}  // namespace tfim::toml
