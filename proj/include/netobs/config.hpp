#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace netobs {

/// One `section.key=value` assignment and where it came from.
struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    std::string origin;  // "file:line" or "--set"
};

/// Flat config text: one assignment per line, '#' to end of line is a comment,
/// whitespace around names and values is dropped. ParseError names the line.
std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source);
std::vector<ConfigEntry> read_config_file(const std::string& path);

/// A single "section.key=value" from the command line; UsageError when malformed.
ConfigEntry parse_assignment(std::string_view text);

// Value parsers shared by config consumers; each throws ParseError naming the key.
double config_double(std::string_view key, std::string_view value);
std::int64_t config_int(std::string_view key, std::string_view value);
std::uint64_t config_count(std::string_view key, std::string_view value);
/// true/false, 1/0, yes/no.
bool config_bool(std::string_view key, std::string_view value);

}  // namespace netobs
