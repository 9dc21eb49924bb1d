#pragma once

// Flat dotted-key configuration files: one "key = value" per line, `#`
// comments. Unknown keys are errors, not warnings; every key read is
// checked off against the registry built from the accessors used.

#include <cstdlib>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace asyncnav {

class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key) != 0)
        throw std::runtime_error("config: duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const {
    const auto it = lookup(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
      throw std::runtime_error("config: key '" + key + "' is not a number: " + it->second);
    return v;
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = lookup(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
      throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
    return v;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = lookup(key);
    return it == values_.end() ? fallback : it->second;
  }

  // Call after reading every supported key; leftover keys are schema
  // violations.
  void reject_unknown_keys() const {
    for (const auto& [key, value] : values_)
      if (consumed_.count(key) == 0)
        throw std::runtime_error("config: unknown key '" + key + "'");
  }

 private:
  std::map<std::string, std::string>::const_iterator lookup(const std::string& key) const {
    consumed_.insert(key);
    return values_.find(key);
  }

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace asyncnav
