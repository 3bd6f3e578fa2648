#include "nnd_app/toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nnd/error.hpp"

namespace nnd::app {

namespace {

class LineParser {
public:
    LineParser(std::string_view s, const std::string& source, std::size_t line)
        : s_(s), source_(source), line_(line) {}

    TomlValue value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        TomlValue v;
        v.line = line_;
        const char c = s_[pos_];
        if (c == '"') {
            v.type = TomlValue::Type::string;
            v.text = quoted();
        } else if (c == '[') {
            v.type = TomlValue::Type::array;
            ++pos_;
            skip_ws();
            if (peek() == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                auto item = value();
                if (item.type == TomlValue::Type::array) fail("nested arrays are not supported");
                v.items.push_back(std::move(item));
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    skip_ws();
                    if (peek() == ']') {
                        ++pos_;
                        break;
                    }
                    continue;
                }
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                fail("expected ',' or ']' in array");
            }
        } else {
            const auto start = pos_;
            while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && !std::isspace(uc(s_[pos_]))) ++pos_;
            const std::string token(s_.substr(start, pos_ - start));
            if (token == "true" || token == "false") {
                v.type = TomlValue::Type::boolean;
                v.boolean = token == "true";
            } else {
                v.type = TomlValue::Type::number;
                number(token, v);
            }
        }
        return v;
    }

    void expect_end() {
        skip_ws();
        if (pos_ < s_.size()) fail("unexpected trailing characters");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

private:
    static unsigned char uc(char c) { return static_cast<unsigned char>(c); }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(uc(s_[pos_]))) ++pos_;
    }

    std::string quoted() {
        std::string out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) break;
                c = s_[pos_++];
                if (c == 'n') c = '\n';
                else if (c == 't') c = '\t';
                else if (c != '\\' && c != '"') fail("unsupported escape sequence");
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    void number(const std::string& token, TomlValue& v) const {
        std::string t;
        for (char c : token)
            if (c != '_') t.push_back(c);
        if (t.empty()) fail("missing value");
        const std::string_view body = (t[0] == '+' || t[0] == '-') ? std::string_view(t).substr(1) : std::string_view(t);
        const double sign = t[0] == '-' ? -1.0 : 1.0;
        if (body == "inf") {
            v.number = sign * INFINITY;
            return;
        }
        if (body == "nan") {
            v.number = NAN;
            return;
        }
        const char* first = t.data() + (t[0] == '+' ? 1 : 0);
        const char* last = t.data() + t.size();
        auto [p, ec] = std::from_chars(first, last, v.number);
        if (ec != std::errc() || p != last) fail("cannot parse value '" + token + "'");
        v.integer = t.find_first_of(".eE") == std::string::npos;
    }

    std::string_view s_;
    const std::string& source_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Drops a '#' comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && in_string) {
            ++i;
            continue;
        }
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

}  // namespace

TomlDocument parse_toml(std::string_view text, const std::string& source_name) {
    TomlDocument doc;
    std::string current;
    doc.sections[current].line = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        const auto line = trim(strip_comment(text.substr(start, end - start)));
        start = end + 1;
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(source_name, line_no, "malformed section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) throw ParseError(source_name, line_no, "invalid section name");
            current = std::string(name);
            if (doc.sections.count(current) && doc.sections[current].line != 0)
                throw ParseError(source_name, line_no, "duplicate section [" + current + "]");
            doc.sections[current].line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source_name, line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (!valid_key(key)) throw ParseError(source_name, line_no, "invalid key '" + key + "'");
        LineParser p(line.substr(eq + 1), source_name, line_no);
        auto v = p.value();
        p.expect_end();
        auto& table = doc.sections[current];
        if (table.entries.count(key)) throw ParseError(source_name, line_no, "duplicate key '" + key + "'");
        table.entries.emplace(key, std::move(v));
    }
    if (doc.sections[""].entries.empty()) doc.sections.erase("");
    return doc;
}

TomlDocument read_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str(), path);
}

}  // namespace nnd::app
