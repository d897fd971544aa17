#pragma once

// Plain-text experiment configuration.
//
//   # comment
//   key = value
//   key = [item, item, item]
//
// One assignment per line, keys are identifiers, duplicate keys are errors.
// Readers pull typed values by key; require_all_used() then rejects any key
// nobody asked for, so a misspelled key fails loudly instead of silently
// falling back to a default.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ssum {

class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, const std::string& source = "<config>");
  /// Throws ConfigError if the file cannot be read.
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  /// Throws ConfigError naming the first key that was never read.
  void require_all_used() const;

  /// Sets or replaces a scalar value (command-line overrides).
  void set(const std::string& key, const std::string& value);

 private:
  struct Entry {
    std::vector<std::string> items;
    bool is_list = false;
    int line = 0;
  };
  const Entry* lookup(const std::string& key) const;
  const std::string& scalar(const std::string& key, const Entry& e) const;
  [[noreturn]] void fail(const std::string& key, const Entry& e, const std::string& what) const;

  std::string source_;
  std::map<std::string, Entry> values_;
  mutable std::set<std::string> used_;
};

/// Strict number parsing: the whole token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

}  // namespace ssum
