#include "sifield/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace sifield {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected 'key = value', got '{}'", source, lineno, line));
    const std::string key = trim(line.substr(0, eq));
    std::string value = line.substr(eq + 1);
    if (const auto hash = value.find(" #"); hash != std::string::npos) value.erase(hash);
    value = trim(value);
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", source, lineno));
    if (c.entries_.count(key))
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}' (first set on line {})", source, lineno, key,
                                    c.entries_[key].line));
    c.entries_[key] = {value, lineno};
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Config::where(const std::string& key) const {
  const Entry* e = find(key);
  if (e && e->line > 0) return fmt::format("{}:{}: key '{}'", source_, e->line, key);
  return fmt::format("{}: key '{}'", source_, key);
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  if (const Entry* e = find(key)) return e->value;
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("{}: missing required key '{}'", source_, key));
}

double Config::get_double(const std::string& key, const std::optional<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("{}: missing required key '{}'", source_, key));
  }
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(e->value.c_str(), &end);
  if (e->value.empty() || *end != '\0' || errno == ERANGE)
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", where(key), e->value));
  return v;
}

long long Config::get_int(const std::string& key, const std::optional<long long>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("{}: missing required key '{}'", source_, key));
  }
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(e->value.c_str(), &end, 10);
  if (e->value.empty() || *end != '\0' || errno == ERANGE)
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", where(key), e->value));
  return v;
}

bool Config::get_bool(const std::string& key, const std::optional<bool>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("{}: missing required key '{}'", source_, key));
  }
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", where(key), e->value));
}

void Config::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, entry] : entries_)
    if (!known.count(key)) throw ConfigError(fmt::format("{}: unknown key", where(key)));
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [key, entry] : entries_) out += fmt::format("{} = {}\n", key, entry.value);
  return out;
}

}  // namespace sifield
