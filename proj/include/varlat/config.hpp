#pragma once

#include <map>
#include <string>

#include "varlat/workload.hpp"

namespace varlat {

// Minimal TOML-like key/value file: `key = value` lines, `#` comments,
// optional `[section]` headers that prefix keys with `section.`.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);      // throws on malformed lines
    static KeyValueConfig load_file(const std::string& path);  // throws on missing file

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Maps the documented config schema onto a SimConfig. Unknown keys are
// rejected so typos fail loudly.
SimConfig sim_config_from(const KeyValueConfig& kv);

}  // namespace varlat
