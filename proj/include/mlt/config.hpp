#pragma once

// key=value run configuration. '#' starts a comment; values keep internal
// whitespace. Numeric parsing is locale-independent.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mlt {

class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      // trim
      size_t a = line.find_first_not_of(" \t");
      if (a == std::string::npos) continue;
      size_t b = line.find_last_not_of(" \t");
      line = line.substr(a, b - a + 1);
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key=value");
      std::string key = line.substr(0, eq);
      std::string val = line.substr(eq + 1);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
        key.pop_back();
      while (!val.empty() && (val.front() == ' ' || val.front() == '\t'))
        val.erase(val.begin());
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": empty key");
      cfg.values_[key] = val;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse(in);
  }

  void set(const std::string& key, const std::string& val) {
    values_[key] = val;
  }
  void set_int(const std::string& key, long v) { values_[key] = std::to_string(v); }
  void set_real(const std::string& key, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    values_[key] = ss.str();
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::runtime_error("missing config key: " + key);
    return it->second;
  }

  std::string get(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  long get_int(const std::string& key, long dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    long v = 0;
    auto [p, ec] = std::from_chars(it->second.data(),
                                   it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
      throw std::runtime_error("config key '" + key + "' is not an integer: " +
                               it->second);
    return v;
  }

  double get_real(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + key + "' is not a number: " +
                               it->second);
    }
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

} // namespace mlt
