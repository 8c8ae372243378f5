#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/csv.hpp"

namespace sbrsf {

// Flat key=value configuration text. Keys carry dotted section prefixes
// ("sim.n", "model.node.0"); '#' starts a comment; insertion order is kept so
// a config serializes back in a stable, diffable form.
class KvConfig {
public:
  KvConfig() = default;

  static KvConfig parse_string(const std::string& text) {
    KvConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
      cfg.set(key, value);
    }
    return cfg;
  }

  static KvConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  void set(const std::string& key, const std::string& value) {
    for (auto& item : items_) {
      if (item.first == key) {
        item.second = value;
        return;
      }
    }
    items_.emplace_back(key, value);
  }

  bool has(const std::string& key) const {
    for (const auto& item : items_)
      if (item.first == key) return true;
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& item : items_)
      if (item.first == key) return item.second;
    throw std::runtime_error("config: missing key '" + key + "'");
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    for (const auto& item : items_)
      if (item.first == key) return item.second;
    return fallback;
  }

  double get_double(const std::string& key) const { return parse_double(get(key), key); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    const double v = get_double(key);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
      throw std::runtime_error("config: key '" + key + "' is not an integer");
    return i;
  }
  long long get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& item : items_)
      if (item.first.rfind(prefix, 0) == 0) out.push_back(item.first);
    return out;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& item : items_) {
      out += item.first;
      out += " = ";
      out += item.second;
      out += '\n';
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// Splits a whitespace-separated value list ("0.3 0.1 -0.2").
inline std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace sbrsf
