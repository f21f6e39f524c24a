#include "promptcls/kvconfig.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptcls/errors.hpp"

namespace promptcls {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file not found: " + path);
    KvConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + " has no '=': " + t);
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw UsageError("config line " + std::to_string(line_no) + " has an empty key");
        if (cfg.file_.count(key))
            throw UsageError("config key repeated: " + key);
        cfg.file_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

void KvConfig::set_override(const std::string& key, const std::string& value) {
    overrides_[key] = value;
}

std::string KvConfig::env_name(const std::string& key) {
    std::string name = "PROMPTCLS_";
    for (const char c : key) {
        if (c == '.' || c == '-')
            name += '_';
        else
            name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

std::optional<std::string> KvConfig::raw(const std::string& key) const {
    if (const auto it = overrides_.find(key); it != overrides_.end()) return it->second;
    if (const char* env = std::getenv(env_name(key).c_str())) return std::string(env);
    if (const auto it = file_.find(key); it != file_.end()) return it->second;
    return std::nullopt;
}

std::string KvConfig::get_string(const std::string& key, const std::string& def) const {
    return raw(key).value_or(def);
}

std::string KvConfig::require_string(const std::string& key) const {
    const auto v = raw(key);
    if (!v || v->empty()) throw UsageError("config key required: " + key);
    return *v;
}

long long KvConfig::get_int(const std::string& key, long long def) const {
    const auto v = raw(key);
    if (!v) return def;
    try {
        std::size_t pos = 0;
        const long long out = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not an integer: " + *v);
    }
}

double KvConfig::get_double(const std::string& key, double def) const {
    const auto v = raw(key);
    if (!v) return def;
    try {
        std::size_t pos = 0;
        const double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not a number: " + *v);
    }
}

bool KvConfig::get_bool(const std::string& key, bool def) const {
    const auto v = raw(key);
    if (!v) return def;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw UsageError("config key " + key + " is not a boolean: " + *v);
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t def) const {
    const auto v = raw(key);
    if (!v) return def;
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not an unsigned integer: " + *v);
    }
}

std::vector<std::string> KvConfig::get_list(const std::string& key,
                                            const std::vector<std::string>& def) const {
    const auto v = raw(key);
    if (!v) return def;
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(*v);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::vector<std::string> KvConfig::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : file_) out.push_back(k);
    for (const auto& [k, _] : overrides_)
        if (!file_.count(k)) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace promptcls
