#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace relex {

// Flat `key = value` text configuration. Lines starting with '#' and blank
// lines are skipped. Values are typed at the accessors; unparseable values
// are rejected there with the offending key named.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_f64(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // canonical serialization: sorted keys, one `key = value` per line
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace relex
