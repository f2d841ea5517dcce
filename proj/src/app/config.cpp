// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/app/config.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/util.hpp"

#include <filesystem>
#include <sstream>

namespace lagdrift::app {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(std::string_view v, int line_no) {
    if (v.empty() || v.front() != '"') return std::string(v);
    if (v.size() < 2 || v.back() != '"') {
        config_error("line " + std::to_string(line_no) + ": unterminated string");
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) ++i;
        out += v[i];
    }
    return out;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& base_dir) {
    Config c;
    c.base_dir_ = base_dir.empty() ? "." : base_dir;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') config_error("line " + std::to_string(line_no) + ": bad section");
            section = std::string(trim(t.substr(1, t.size() - 2)));
            if (section.empty()) config_error("line " + std::to_string(line_no) + ": empty section");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            config_error("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(t.substr(0, eq)));
        if (key.empty()) config_error("line " + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (c.values_.count(full)) config_error("duplicate key '" + full + "'");
        c.values_[full] = unquote(trim(t.substr(eq + 1)), line_no);
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        config_error("cannot read config: " + std::string(e.what()));
    }
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse(text, dir);
}

const std::string* Config::find(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    try {
        return parse_double(*v);
    } catch (const Error&) {
        config_error("'" + key + "' is not a number: " + *v);
    }
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    try {
        return parse_int(*v);
    } catch (const Error&) {
        config_error("'" + key + "' is not an integer: " + *v);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    config_error("'" + key + "' must be true or false");
}

std::string Config::get_path(const std::string& key, const std::string& fallback) const {
    const std::string v = get_string(key, fallback);
    if (v.empty()) return v;
    const std::filesystem::path p(v);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) out.push_back(k);
    }
    return out;
}

std::vector<std::string> Config::canonical_lines() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k + " = " + v);
    return out;
}

}  // namespace lagdrift::app
