#pragma once

// Minimal TOML-subset reader for run/scene configuration files: comments,
// [section] and [[array-of-tables]] headers, bare dotted keys, strings,
// bools, numbers, and (nested) arrays. Enough for the config surface of this
// project without pulling in a full TOML implementation.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sgslam/core/types.hpp"

namespace sgslam {

class ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

class ConfigValue {
 public:
  using Storage = std::variant<std::monostate, bool, int64_t, double,
                               std::string, ConfigArray>;

  ConfigValue() = default;
  ConfigValue(bool b) : v_(b) {}
  ConfigValue(int64_t i) : v_(i) {}
  ConfigValue(double d) : v_(d) {}
  ConfigValue(std::string s) : v_(std::move(s)) {}
  ConfigValue(ConfigArray a) : v_(std::move(a)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_array() const { return std::holds_alternative<ConfigArray>(v_); }

  bool as_bool() const {
    if (auto* b = std::get_if<bool>(&v_)) return *b;
    throw Error(ErrorCode::kParseError, "config value is not a bool");
  }
  int64_t as_int() const {
    if (auto* i = std::get_if<int64_t>(&v_)) return *i;
    if (auto* d = std::get_if<double>(&v_)) return static_cast<int64_t>(*d);
    throw Error(ErrorCode::kParseError, "config value is not a number");
  }
  double as_double() const {
    if (auto* d = std::get_if<double>(&v_)) return *d;
    if (auto* i = std::get_if<int64_t>(&v_)) return static_cast<double>(*i);
    throw Error(ErrorCode::kParseError, "config value is not a number");
  }
  const std::string& as_string() const {
    if (auto* s = std::get_if<std::string>(&v_)) return *s;
    throw Error(ErrorCode::kParseError, "config value is not a string");
  }
  const ConfigArray& as_array() const {
    if (auto* a = std::get_if<ConfigArray>(&v_)) return *a;
    throw Error(ErrorCode::kParseError, "config value is not an array");
  }
  std::vector<double> as_double_array() const {
    std::vector<double> out;
    for (const auto& v : as_array()) out.push_back(v.as_double());
    return out;
  }

  const Storage& storage() const { return v_; }

 private:
  Storage v_;
};

/// Tree node: leaf values, a child table, or an array of child tables.
class ConfigTable {
 public:
  using TablePtr = std::shared_ptr<ConfigTable>;

  bool has(const std::string& dotted) const { return find(dotted) != nullptr; }

  const ConfigValue* find(const std::string& dotted) const {
    const ConfigTable* t = this;
    std::string key = dotted;
    size_t dot;
    while ((dot = key.find('.')) != std::string::npos) {
      auto it = t->children_.find(key.substr(0, dot));
      if (it == t->children_.end()) return nullptr;
      t = it->second.get();
      key = key.substr(dot + 1);
    }
    auto it = t->values_.find(key);
    return it == t->values_.end() ? nullptr : &it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const ConfigValue* v = find(key);
    return v ? v->as_double() : fallback;
  }
  int64_t get_int(const std::string& key, int64_t fallback) const {
    const ConfigValue* v = find(key);
    return v ? v->as_int() : fallback;
  }
  bool get_bool(const std::string& key, bool fallback) const {
    const ConfigValue* v = find(key);
    return v ? v->as_bool() : fallback;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    const ConfigValue* v = find(key);
    return v ? v->as_string() : fallback;
  }

  /// Child table at a dotted path; null when absent.
  const ConfigTable* table(const std::string& dotted) const {
    const ConfigTable* t = this;
    std::string rest = dotted;
    while (!rest.empty()) {
      size_t dot = rest.find('.');
      std::string head = dot == std::string::npos ? rest : rest.substr(0, dot);
      rest = dot == std::string::npos ? std::string() : rest.substr(dot + 1);
      auto it = t->children_.find(head);
      if (it == t->children_.end()) return nullptr;
      t = it->second.get();
    }
    return t;
  }

  /// Array-of-tables entries registered under a dotted path.
  std::vector<const ConfigTable*> table_array(const std::string& dotted) const {
    const ConfigTable* parent = this;
    std::string key = dotted;
    size_t dot;
    while ((dot = key.find('.')) != std::string::npos) {
      parent = parent->table(key.substr(0, dot));
      if (!parent) return {};
      key = key.substr(dot + 1);
    }
    auto it = parent->table_arrays_.find(key);
    std::vector<const ConfigTable*> out;
    if (it == parent->table_arrays_.end()) return out;
    for (const auto& t : it->second) out.push_back(t.get());
    return out;
  }

  void set(const std::string& dotted, ConfigValue v) {
    ConfigTable* t = this;
    std::string key = dotted;
    size_t dot;
    while ((dot = key.find('.')) != std::string::npos) {
      t = t->child(key.substr(0, dot));
      key = key.substr(dot + 1);
    }
    t->values_[key] = std::move(v);
  }

  ConfigTable* child(const std::string& name) {
    auto it = children_.find(name);
    if (it == children_.end()) {
      it = children_.emplace(name, std::make_shared<ConfigTable>()).first;
    }
    return it->second.get();
  }

  ConfigTable* append_table_entry(const std::string& dotted) {
    ConfigTable* parent = this;
    std::string key = dotted;
    size_t dot;
    while ((dot = key.find('.')) != std::string::npos) {
      parent = parent->child(key.substr(0, dot));
      key = key.substr(dot + 1);
    }
    auto& vec = parent->table_arrays_[key];
    vec.push_back(std::make_shared<ConfigTable>());
    return vec.back().get();
  }

  const std::map<std::string, ConfigValue>& values() const { return values_; }
  const std::map<std::string, TablePtr>& children() const { return children_; }
  const std::map<std::string, std::vector<TablePtr>>& table_arrays() const {
    return table_arrays_;
  }

 private:
  std::map<std::string, ConfigValue> values_;
  std::map<std::string, TablePtr> children_;
  std::map<std::string, std::vector<TablePtr>> table_arrays_;
};

namespace config_detail {

inline void skip_ws(const std::string& s, size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline ConfigValue parse_value(const std::string& s, size_t& i);

inline ConfigValue parse_scalar_token(const std::string& tok) {
  if (tok == "true") return ConfigValue(true);
  if (tok == "false") return ConfigValue(false);
  if (tok.empty()) throw Error(ErrorCode::kParseError, "empty config value");
  bool is_float = tok.find_first_of(".eE") != std::string::npos;
  try {
    size_t used = 0;
    if (is_float) {
      double d = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return ConfigValue(d);
    }
    int64_t v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return ConfigValue(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "cannot parse config value '" + tok + "'");
  }
}

inline ConfigValue parse_value(const std::string& s, size_t& i) {
  skip_ws(s, i);
  if (i >= s.size()) throw Error(ErrorCode::kParseError, "missing config value");
  if (s[i] == '"') {
    std::string out;
    ++i;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      out.push_back(s[i++]);
    }
    if (i >= s.size()) throw Error(ErrorCode::kParseError, "unterminated string");
    ++i;
    return ConfigValue(std::move(out));
  }
  if (s[i] == '[') {
    ++i;
    ConfigArray arr;
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
      ++i;
      return ConfigValue(std::move(arr));
    }
    while (true) {
      arr.push_back(parse_value(s, i));
      skip_ws(s, i);
      if (i < s.size() && s[i] == ',') {
        ++i;
        skip_ws(s, i);
        if (i < s.size() && s[i] == ']') { ++i; break; }  // trailing comma
        continue;
      }
      if (i < s.size() && s[i] == ']') {
        ++i;
        break;
      }
      throw Error(ErrorCode::kParseError, "expected ',' or ']' in array");
    }
    return ConfigValue(std::move(arr));
  }
  size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != ' ' &&
         s[i] != '\t' && s[i] != '#') {
    ++i;
  }
  return parse_scalar_token(s.substr(start, i - start));
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace config_detail

inline ConfigTable parse_config(const std::string& text) {
  using namespace config_detail;
  ConfigTable root;
  ConfigTable* current = &root;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    try {
      if (line.size() >= 4 && line.substr(0, 2) == "[[") {
        size_t end = line.find("]]");
        if (end == std::string::npos)
          throw Error(ErrorCode::kParseError, "unterminated [[section]]");
        current = root.append_table_entry(trim(line.substr(2, end - 2)));
      } else if (line[0] == '[') {
        size_t end = line.find(']');
        if (end == std::string::npos)
          throw Error(ErrorCode::kParseError, "unterminated [section]");
        std::string path = trim(line.substr(1, end - 1));
        ConfigTable* t = &root;
        while (!path.empty()) {
          size_t dot = path.find('.');
          std::string head = dot == std::string::npos ? path : path.substr(0, dot);
          path = dot == std::string::npos ? std::string() : path.substr(dot + 1);
          t = t->child(head);
        }
        current = t;
      } else {
        size_t eq = line.find('=');
        if (eq == std::string::npos)
          throw Error(ErrorCode::kParseError, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string rhs = trim(line.substr(eq + 1));
        size_t i = 0;
        current->set(key, parse_value(rhs, i));
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError,
                  "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return root;
}

inline ConfigTable parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// Applies a `dotted.key=value` override (CLI flag form) onto a parsed tree.
inline void apply_override(ConfigTable& root, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kParseError,
                "override must be key=value: " + assignment);
  }
  std::string key = config_detail::trim(assignment.substr(0, eq));
  std::string rhs = config_detail::trim(assignment.substr(eq + 1));
  size_t i = 0;
  root.set(key, config_detail::parse_value(rhs, i));
}

}  // namespace sgslam
