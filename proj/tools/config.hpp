#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace trimlab::tools {

/// A configuration problem tied to one key. The CLI prints "key: message"
/// and exits with status 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Flat "key = value" text. '#' starts a comment; "[section]" lines prefix
/// the following keys with "section."; later assignments win.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text, const std::string& origin = "<string>");
  static RunConfig load(const std::string& path);

  /// "key=value" from the command line.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  /// Comma-separated reals.
  std::vector<double> reals(const std::string& key) const;
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const;
  /// Comma-separated integers; "a..b" expands to the inclusive range.
  std::vector<std::int64_t> integers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback) const;
  /// One of `choices`.
  std::string choice(const std::string& key, const std::vector<std::string>& choices,
                     const std::string& fallback) const;

  /// Throws for any key outside `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  /// Canonical text: sorted "key = value" lines.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Every key the CLI understands.
const std::set<std::string>& known_keys();

}  // namespace trimlab::tools
