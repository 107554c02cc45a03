#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "greater/error.hpp"

namespace greater {

// Minimal TOML-style run configuration: `key = value` lines, optional
// [section] headers (folded into dotted key prefixes), # comments, quoted or
// bare scalar values. One flat schema per subcommand keeps this deliberately
// small.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text, const std::string& origin = "<string>") {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = strip_comment(line);
      const std::string t = trim(stripped);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw Error(Errc::ConfigError,
                      origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw Error(Errc::ConfigError,
                    origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw Error(Errc::ConfigError, origin + ":" + std::to_string(lineno) + ": empty key");
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = unquote(value, origin, lineno);
      if (!section.empty()) key = section + "." + key;
      cfg.kv_[key] = value;
    }
    if (cfg.has("schema_version") && cfg.get_int("schema_version") != 1)
      throw Error(Errc::ConfigError, origin + ": unsupported schema_version");
    return cfg;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw Error(Errc::ConfigError, "missing required config key: " + key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  std::int64_t get_int(const std::string& key) const { return to_int(key, get_string(key)); }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw Error(Errc::ConfigError, "config key " + key + " must be true or false");
  }

  // Canonical form used for hashing: sorted key=value lines. The artifact
  // location ("out") never participates — moving outputs must not change the
  // manifest identity.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : kv_) {
      if (k == "out") continue;
      s += k;
      s.push_back('=');
      s += v;
      s.push_back('\n');
    }
    return s;
  }

  // FNV-1a 64 over the canonical form.
  std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  // Removes a trailing comment, respecting double quotes.
  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string unquote(const std::string& s, const std::string& origin, std::size_t lineno) {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\') {
        if (i + 2 >= s.size())
          throw Error(Errc::ConfigError,
                      origin + ":" + std::to_string(lineno) + ": dangling escape");
        ++i;
        switch (s[i]) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default:
            throw Error(Errc::ConfigError,
                        origin + ":" + std::to_string(lineno) + ": unknown escape");
        }
      } else {
        out.push_back(s[i]);
      }
    }
    return out;
  }

  static std::int64_t to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
      throw Error(Errc::ConfigError, "config key " + key + " is not an integer: " + v);
    return x;
  }

  static double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
      throw Error(Errc::ConfigError, "config key " + key + " is not a number: " + v);
    return x;
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace greater
