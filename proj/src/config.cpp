#include "alignet/config.hpp"

#include <cctype>
#include <fstream>

#include "alignet/errors.hpp"

namespace alignet {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoFailure", "cannot open config '" + path + "'");
    Config cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            fail("ConfigError", path + ":" + std::to_string(line_no) + ": expected `key = value`");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            fail("ConfigError", path + ":" + std::to_string(line_no) + ": empty key");
        if (cfg.values_.count(key))
            fail("ConfigError", path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
    consumed_.insert(key);  // explicit flags are consumed by definition
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::lookup(const std::string& key, const std::string& fallback, bool required) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (required) fail("ConfigError", "missing required key '" + key + "'");
    return fallback;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    return lookup(key, fallback, false);
}

std::string Config::require_string(const std::string& key) { return lookup(key, "", true); }

double Config::get_double(const std::string& key, double fallback) {
    const std::string raw = lookup(key, "", false);
    if (raw.empty() && !has(key)) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        fail("ConfigError", "key '" + key + "': '" + raw + "' is not a number");
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) {
    const std::string raw = lookup(key, "", false);
    if (raw.empty() && !has(key)) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        fail("ConfigError", "key '" + key + "': '" + raw + "' is not an integer");
    }
}

std::uint64_t Config::require_seed() {
    // randomized stages never fall back to wall-clock seeding
    const std::string raw = lookup("seed", "", true);
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        fail("ConfigError", "key 'seed': '" + raw + "' is not an unsigned integer");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) {
    const std::string raw = lookup(key, "", false);
    if (raw.empty() && !has(key)) return fallback;
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    fail("ConfigError", "key '" + key + "': '" + raw + "' is not a boolean");
}

void Config::reject_unknown() const {
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key))
            fail("ConfigError", "unknown key '" + key + "' (typo?)");
    }
}

} // namespace alignet
