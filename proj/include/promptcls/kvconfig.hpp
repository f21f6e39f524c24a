#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace promptcls {

// Flat key=value config file. `#` starts a comment line; blank lines are
// skipped. Lookup precedence: explicit overrides (CLI flags) > process
// environment (PROMPTCLS_<KEY> with dots mapped to underscores) > file >
// caller default.
class KvConfig {
public:
    KvConfig() = default;
    static KvConfig load(const std::string& path);

    void set_override(const std::string& key, const std::string& value);

    std::optional<std::string> raw(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& def) const;
    std::string require_string(const std::string& key) const;
    long long get_int(const std::string& key, long long def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& def) const;

    // File plus override keys, sorted (env-only values are not enumerable).
    std::vector<std::string> keys() const;

    static std::string env_name(const std::string& key);

private:
    std::map<std::string, std::string> file_;
    std::map<std::string, std::string> overrides_;
};

}  // namespace promptcls
