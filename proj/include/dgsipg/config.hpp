#pragma once

// Plain-text key = value configuration with command-line overrides.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dgsipg {

class Config {
public:
  static Config from_file(const std::string& path);
  static Config from_text(std::string_view text);

  /// "key=value"; the key must not be empty.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

  /// Throws on keys outside `known`.
  void check_keys(const std::vector<std::string>& known) const;
  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace dgsipg
