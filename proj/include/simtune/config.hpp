#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace simtune {

/// Flat key=value configuration text. `#` lines are comments; `freeze=` may
/// repeat and is collected separately. Typed getters throw ParseError on
/// malformed values.
struct KeyValueConfig {
    std::map<std::string, std::string> values;
    std::vector<std::string> freeze;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return values.count(key) != 0; }
    void set(const std::string& key, std::string value) { values[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_real(const std::string& key, double fallback) const;
};

}  // namespace simtune
