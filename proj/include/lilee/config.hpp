#pragma once

#include "lilee/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lilee {

/// `key = value` run configuration. Blank lines and lines starting with `#`
/// are ignored; relative paths resolve against the file's directory.
class Config {
public:
    static Config load(const std::filesystem::path &path);
    static Config parse(const std::string &text, const std::string &source = "<config>",
                        const std::filesystem::path &base_dir = ".");

    bool has(const std::string &key) const { return values_.count(key) > 0; }
    const std::string &get(const std::string &key) const;
    std::string get_or(const std::string &key, const std::string &fallback) const;
    int get_int(const std::string &key, std::optional<int> fallback = std::nullopt) const;
    double get_double(const std::string &key, std::optional<double> fallback = std::nullopt) const;
    std::uint64_t get_u64(const std::string &key, std::optional<std::uint64_t> fallback = std::nullopt) const;
    IntRange get_range(const std::string &key, std::optional<IntRange> fallback = std::nullopt) const;
    std::vector<std::string> get_list(const std::string &key) const;
    std::filesystem::path get_path(const std::string &key) const;

    /// Overrides a value (command-line flags take precedence over the file).
    void set(const std::string &key, const std::string &value);

    const std::map<std::string, std::string> &values() const noexcept { return values_; }
    const std::filesystem::path &base_dir() const noexcept { return base_dir_; }

    /// FNV-1a 64-bit hash of the canonical `key=value` listing, as 16 hex digits.
    std::string hash() const;

private:
    std::string source_;
    std::filesystem::path base_dir_;
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(std::string_view data) noexcept;

} // namespace lilee
