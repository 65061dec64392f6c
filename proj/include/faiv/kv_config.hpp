#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace faiv {

/// Flat "key = value" text with '#' comments. Keys are unique.
class KeyValueConfig {
public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string getOr(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string serialize() const;

private:
  std::map<std::string, std::string> values_;
};

} // namespace faiv
