#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nnd::app {

/// Value of the config subset: numbers, strings, booleans and flat arrays.
struct TomlValue {
    enum class Type { number, string, boolean, array };

    Type type = Type::number;
    double number = 0;
    bool integer = false;
    std::string text;
    bool boolean = false;
    std::vector<TomlValue> items;
    std::size_t line = 0;
};

struct TomlTable {
    std::size_t line = 0;
    std::map<std::string, TomlValue> entries;
};

/// Section name -> table; keys before the first header go under "".
struct TomlDocument {
    std::map<std::string, TomlTable> sections;

    bool has(const std::string& section) const { return sections.count(section) != 0; }
};

/// Grammar: `[section]` headers, `key = value` lines, `#` comments. Values
/// are double-quoted strings, numbers (inf/nan allowed), true/false, or
/// single-line arrays of those. Throws ParseError naming the line.
TomlDocument parse_toml(std::string_view text, const std::string& source_name = "<config>");
TomlDocument read_toml(const std::string& path);

}  // namespace nnd::app
