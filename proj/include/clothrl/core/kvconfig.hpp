#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"

namespace clothrl {

/// Structured key-value run configuration. File format: one `key = value`
/// pair per line, `#` starts a comment, blank lines ignored. Keys are
/// dotted lowercase paths; the canonical serialization is sorted by key.
/// Every file carries a `schema_version` key.
class KeyValueConfig {
 public:
  static constexpr int kSchemaVersion = 1;

  KeyValueConfig() { set_int("schema_version", kSchemaVersion); }

  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    cfg.values_.clear();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string stripped = strip(strip_comment(line));
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = strip(stripped.substr(0, eq));
      const std::string value = strip(stripped.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    if (!cfg.has("schema_version"))
      throw ConfigError(origin + ": missing schema_version");
    if (cfg.get_int("schema_version") != kSchemaVersion)
      throw ConfigError(origin + ": unsupported schema_version " +
                        cfg.values_.at("schema_version"));
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key) const {
    mark_read(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    mark_read(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::int64_t get_int(const std::string& key) const { return parse_int(key, get_string(key)); }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : (mark_read(key), fallback);
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : (mark_read(key), fallback);
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: key '" + key + "' is not a bool: '" + v + "'");
  }
  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : (mark_read(key), fallback);
  }

  void set_string(const std::string& key, const std::string& v) { values_[key] = v; }
  void set_int(const std::string& key, std::int64_t v) { values_[key] = std::to_string(v); }
  void set_double(const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    values_[key] = buf;
  }
  void set_bool(const std::string& key, bool v) { values_[key] = v ? "true" : "false"; }
  void erase(const std::string& key) { values_.erase(key); }

  /// Canonical text form: sorted `key = value` lines.
  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("config: cannot write " + path);
    f << serialize();
  }

  std::uint64_t hash() const { return fnv1a64(serialize()); }

  /// Keys present in the file that no getter ever touched. Used to reject
  /// misspelled configuration keys.
  std::vector<std::string> unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_)
      if (!read_.count(k)) out.push_back(k);
    return out;
  }

  void require_all_read(const std::string& origin = "config") const {
    const auto unread = unread_keys();
    if (!unread.empty()) {
      std::string msg = origin + ": unknown key(s):";
      for (const auto& k : unread) msg += " '" + k + "'";
      throw ConfigError(msg);
    }
  }

  /// Keys whose values differ between two configs (present-vs-absent counts).
  static std::vector<std::string> diff_keys(const KeyValueConfig& a, const KeyValueConfig& b) {
    std::set<std::string> keys;
    for (const auto& [k, _] : a.values_) keys.insert(k);
    for (const auto& [k, _] : b.values_) keys.insert(k);
    std::vector<std::string> out;
    for (const auto& k : keys) {
      const auto ia = a.values_.find(k);
      const auto ib = b.values_.find(k);
      const bool in_a = ia != a.values_.end();
      const bool in_b = ib != b.values_.end();
      if (in_a != in_b || (in_a && in_b && ia->second != ib->second)) out.push_back(k);
    }
    return out;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  static std::int64_t parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long r = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError("config: key '" + key + "' is not an integer: '" + v + "'");
    return r;
  }
  static double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double r = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError("config: key '" + key + "' is not a number: '" + v + "'");
    return r;
  }
  void mark_read(const std::string& key) const { read_.insert(key); }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

}  // namespace clothrl
