#pragma once

#include <map>
#include <string>
#include <vector>

namespace rcore {

// Flat key/value configuration document with dotted keys, a subset of TOML:
// one "key = value" per line, '#' comments, quoted or bare strings, numbers,
// booleans and [a, b] arrays. Keys are unique; dump() emits sorted keys so a
// document round-trips byte-identically.
class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text);
  static ConfigDoc load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& raw_value);
  void set_double(const std::string& key, double v);
  void set_long(const std::string& key, long v);
  void set_bool(const std::string& key, bool v);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  std::string dump() const;
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;  // raw value text per key
};

}  // namespace rcore
