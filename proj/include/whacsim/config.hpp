#pragma once

// Flat key-value config files:
//   # comment
//   section.key = value
// Values stay strings until a typed getter is called. Keys are kept in
// sorted order so --print-effective-config output is stable.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace whacsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  // "key=value" items, e.g. from --set flags. Later entries win.
  void apply_overrides(const std::vector<std::string>& overrides);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_f64(const std::string& key, double def) const;
  int64_t get_i64(const std::string& key, int64_t def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  std::string require_str(const std::string& key) const;

  // All keys with the given prefix, prefix stripped.
  KeyValueConfig subsection(const std::string& prefix) const;

  std::string to_string() const;

  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace whacsim
