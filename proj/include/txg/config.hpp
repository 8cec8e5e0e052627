#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace txg {

/// Plain-text training config: one `key = value` per line, `#` comments.
/// Command-line flags are applied on top via set().
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace txg
