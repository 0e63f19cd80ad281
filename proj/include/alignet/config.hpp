#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace alignet {

// Flat `key = value` config. Precedence: command-line flags > config file
// > defaults. Every key a command reads is registered; unknown keys in
// the file are errors so typos cannot silently fall back to defaults.
class Config {
  public:
    Config() = default;

    static Config parse_file(const std::string& path);

    void set(const std::string& key, const std::string& value);  // flag override
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    std::string require_string(const std::string& key);
    double get_double(const std::string& key, double fallback);
    std::int64_t get_int(const std::string& key, std::int64_t fallback);
    std::uint64_t require_seed();  // randomized stages need an explicit seed
    bool get_bool(const std::string& key, bool fallback);

    // Throws ConfigError if the file contained keys never read.
    void reject_unknown() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::string lookup(const std::string& key, const std::string& fallback, bool required);

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

} // namespace alignet
