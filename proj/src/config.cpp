#include "lilee/config.hpp"

#include "lilee/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace lilee {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T convert(const std::string &key, const std::string &text) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(fmt::format("{}: invalid value '{}'", key, text));
    return v;
}

} // namespace

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Config Config::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("{}: cannot open configuration file", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    return parse(buffer.str(), path.string(), dir);
}

Config Config::parse(const std::string &text, const std::string &source, const std::filesystem::path &base_dir) {
    Config cfg;
    cfg.source_ = source;
    cfg.base_dir_ = base_dir;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source, line_no));
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", source, line_no));
        if (!cfg.values_.emplace(key, value).second)
            throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", source, line_no, key));
    }
    return cfg;
}

const std::string &Config::get(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(fmt::format("missing configuration key '{}'", key));
    return it->second;
}

std::string Config::get_or(const std::string &key, const std::string &fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string &key, std::optional<int> fallback) const {
    if (!has(key) && fallback) return *fallback;
    return convert<int>(key, get(key));
}

double Config::get_double(const std::string &key, std::optional<double> fallback) const {
    if (!has(key) && fallback) return *fallback;
    return convert<double>(key, get(key));
}

std::uint64_t Config::get_u64(const std::string &key, std::optional<std::uint64_t> fallback) const {
    if (!has(key) && fallback) return *fallback;
    return convert<std::uint64_t>(key, get(key));
}

IntRange Config::get_range(const std::string &key, std::optional<IntRange> fallback) const {
    if (!has(key) && fallback) return *fallback;
    try {
        return parse_range(get(key));
    } catch (const ConfigError &) {
        throw;
    } catch (const std::exception &e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

std::vector<std::string> Config::get_list(const std::string &key) const {
    std::vector<std::string> out;
    std::stringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::filesystem::path Config::get_path(const std::string &key) const {
    std::filesystem::path p = get(key);
    return p.is_absolute() ? p : base_dir_ / p;
}

void Config::set(const std::string &key, const std::string &value) { values_[key] = value; }

std::string Config::hash() const {
    std::string canonical;
    for (const auto &[k, v] : values_) canonical += k + "=" + v + "\n";
    return fmt::format("{:016x}", fnv1a64(canonical));
}

} // namespace lilee
