#include "netobs/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "netobs/error.hpp"

namespace netobs {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

// Empty string on success, otherwise what went wrong.
std::string split(std::string_view text, ConfigEntry& out) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) return "expected section.key=value";
    const auto name = trim(text.substr(0, eq));
    const auto dot = name.find('.');
    if (dot == std::string_view::npos) return "key '" + std::string(name) + "' has no section";
    out.section = std::string(name.substr(0, dot));
    out.key = std::string(name.substr(dot + 1));
    if (!valid_name(out.section) || !valid_name(out.key)) return "bad key '" + std::string(name) + "'";
    out.value = std::string(trim(text.substr(eq + 1)));
    return {};
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* want) {
    throw ParseError("config key " + std::string(key) + ": expected " + want + ", got '" + std::string(value) + "'");
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::string line;
    for (std::size_t ln = 1; std::getline(in, line); ++ln) {
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        ConfigEntry e;
        const std::string origin = source + ":" + std::to_string(ln);
        if (auto err = split(body, e); !err.empty()) throw ParseError(origin + ": " + err);
        e.origin = origin;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

ConfigEntry parse_assignment(std::string_view text) {
    ConfigEntry e;
    if (auto err = split(text, e); !err.empty()) throw UsageError("--set " + std::string(text) + ": " + err);
    e.origin = "--set";
    return e;
}

double config_double(std::string_view key, std::string_view value) {
    double v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size() || !std::isfinite(v)) bad(key, value, "a number");
    return v;
}

std::int64_t config_int(std::string_view key, std::string_view value) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) bad(key, value, "an integer");
    return v;
}

std::uint64_t config_count(std::string_view key, std::string_view value) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) bad(key, value, "a non-negative integer");
    return v;
}

bool config_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad(key, value, "true or false");
}

}  // namespace netobs
