// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lagdrift::app {

/// Flat TOML-style configuration: `[section]` headers, `key = value` lines, `#`
/// comments. Values are bare tokens or double-quoted strings. Keys are addressed as
/// "section.key". Relative paths resolve against the config file's directory.
class Config {
  public:
    static Config parse(const std::string& text, const std::string& base_dir = ".");
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Relative values are resolved against the config directory.
    std::string get_path(const std::string& key, const std::string& fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Keys never read through a getter; used to reject typos.
    std::vector<std::string> unused_keys() const;

    /// Sorted "key = value" lines; the basis of the run hash and the provenance echo.
    std::vector<std::string> canonical_lines() const;
    const std::string& base_dir() const { return base_dir_; }

  private:
    const std::string* find(const std::string& key) const;

    std::map<std::string, std::string> values_;
    std::string base_dir_ = ".";
    mutable std::set<std::string> used_;
};

}  // namespace lagdrift::app
