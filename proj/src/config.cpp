#include "ssum/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "ssum/errors.hpp"

namespace ssum {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty() || !(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto where = source + ":" + std::to_string(line_no) + ": ";
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + "invalid key '" + key + "'");
    if (cfg.values_.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");

    Entry e;
    e.line = line_no;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw ConfigError(where + "unterminated list for '" + key + "'");
      e.is_list = true;
      std::string_view body = trim(value.substr(1, value.size() - 2));
      while (!body.empty()) {
        auto comma = body.find(',');
        std::string_view item = trim(body.substr(0, comma));
        if (item.empty()) throw ConfigError(where + "empty list item in '" + key + "'");
        e.items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        body = body.substr(comma + 1);
        if (trim(body).empty()) throw ConfigError(where + "trailing comma in '" + key + "'");
      }
    } else {
      if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
      e.items.emplace_back(value);
    }
    cfg.values_.emplace(std::move(key), std::move(e));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  Entry e;
  e.items.push_back(value);
  values_[key] = std::move(e);
}

const ConfigFile::Entry* ConfigFile::lookup(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void ConfigFile::fail(const std::string& key, const Entry& e, const std::string& what) const {
  std::string where = e.line > 0 ? source_ + ":" + std::to_string(e.line) + ": " : source_ + ": ";
  throw ConfigError(where + "'" + key + "' " + what);
}

const std::string& ConfigFile::scalar(const std::string& key, const Entry& e) const {
  if (e.is_list) fail(key, e, "expects a single value, got a list");
  return e.items.front();
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = lookup(key);
  return e ? scalar(key, *e) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const Entry* e = lookup(key);
  if (!e) return fallback;
  auto v = parse_double(scalar(key, *e));
  if (!v) fail(key, *e, "expects a number");
  return *v;
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  const Entry* e = lookup(key);
  if (!e) return fallback;
  auto v = parse_integer(scalar(key, *e));
  if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
    fail(key, *e, "expects an integer");
  }
  return static_cast<int>(*v);
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = lookup(key);
  if (!e) return fallback;
  std::string_view s = trim(scalar(key, *e));
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(key, *e, "expects an unsigned 64-bit integer");
  }
  return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = lookup(key);
  if (!e) return fallback;
  const std::string& s = scalar(key, *e);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail(key, *e, "expects true or false");
}

std::vector<std::string> ConfigFile::get_list(const std::string& key,
                                              const std::vector<std::string>& fallback) const {
  const Entry* e = lookup(key);
  return e ? e->items : fallback;
}

std::vector<int> ConfigFile::get_int_list(const std::string& key,
                                          const std::vector<int>& fallback) const {
  const Entry* e = lookup(key);
  if (!e) return fallback;
  std::vector<int> out;
  for (const auto& item : e->items) {
    auto v = parse_integer(item);
    if (!v || *v < 0 || *v > std::numeric_limits<int>::max()) {
      fail(key, *e, "expects non-negative integers");
    }
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

void ConfigFile::require_all_used() const {
  const Entry* first = nullptr;
  std::string first_key;
  for (const auto& [key, e] : values_) {
    if (used_.count(key)) continue;
    if (!first || e.line < first->line) {
      first = &e;
      first_key = key;
    }
  }
  if (first) fail(first_key, *first, "is not a recognized key");
}

}  // namespace ssum
