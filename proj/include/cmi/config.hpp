#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "cmi/errors.hpp"

namespace cmi {

// Flat key=value configuration with dotted section keys (kernel.scale,
// clr.alpha, ...).  '#' starts a comment; blank lines ignored; unknown keys
// rejected against the caller's allow-list.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_config("cannot open config file '" + path + "'");
    return from_stream(in, path);
  }

  static Config from_stream(std::istream& in, const std::string& origin = "<stream>") {
    Config cfg;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto notspace = [](unsigned char ch) { return !std::isspace(ch); };
      auto b = std::find_if(line.begin(), line.end(), notspace);
      auto e = std::find_if(line.rbegin(), line.rend(), notspace).base();
      if (b >= e) continue;
      std::string trimmed(b, e);
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw invalid_config(origin + ":" + std::to_string(lineno) + ": expected key=value");
      std::string key = trimmed.substr(0, eq);
      std::string val = trimmed.substr(eq + 1);
      while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
      while (!val.empty() && std::isspace(static_cast<unsigned char>(val.front()))) val.erase(0, 1);
      if (key.empty())
        throw invalid_config(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = val;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size())
      throw invalid_config("config key '" + key + "': cannot parse number '" + it->second + "'");
    return v;
  }

  long get_long(const std::string& key, long dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    long v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size())
      throw invalid_config("config key '" + key + "': cannot parse integer '" + it->second + "'");
    return v;
  }

  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : values_)
      if (!allowed.count(k)) throw invalid_config("unknown config key '" + k + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cmi
