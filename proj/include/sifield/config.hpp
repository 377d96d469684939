#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace sifield {

/// Invalid configuration; the message names the source line and key when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; values run to the end of the line, trailing "# ..." removed.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const;
  double get_double(const std::string& key, const std::optional<double>& fallback = std::nullopt) const;
  long long get_int(const std::string& key, const std::optional<long long>& fallback = std::nullopt) const;
  bool get_bool(const std::string& key, const std::optional<bool>& fallback = std::nullopt) const;

  /// Throws for any key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  /// `key = value` lines in key order.
  std::string dump() const;

  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string where(const std::string& key) const;
  const Entry* find(const std::string& key) const;

  std::string source_ = "<config>";
  std::map<std::string, Entry> entries_;
};

}  // namespace sifield
