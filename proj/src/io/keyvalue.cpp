#include "ldct/io/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ldct/error.hpp"

namespace ldct::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCategory::config,
            source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorCategory::config, source + ":" + std::to_string(lineno) + ": empty key");
    require(!kv.lookup(key), ErrorCategory::config, source + ": duplicate key '" + key + "'");
    kv.entries_.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

const std::string* KeyValues::lookup(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

bool KeyValues::has(const std::string& key) const { return lookup(key) != nullptr; }

void KeyValues::set(const std::string& key, std::string value) {
  require(value.find('\n') == std::string::npos && value.find('#') == std::string::npos, ErrorCategory::config,
          "value of '" + key + "' may not contain newlines or '#'");
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

void KeyValues::set(const std::string& key, double value) { set(key, format_number(value)); }

void KeyValues::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_number(values[i]);
  set(key, std::move(s));
}

void KeyValues::bad_value(const std::string& key, const std::string& expected) const {
  fail(ErrorCategory::config, source_ + ": key '" + key + "' expects " + expected + ", got '" + *lookup(key) + "'");
}

std::string KeyValues::text(const std::string& key) const {
  const auto* v = lookup(key);
  require(v != nullptr, ErrorCategory::config, source_ + ": missing required key '" + key + "'");
  consumed_.insert(key);
  return *v;
}

std::string KeyValues::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double KeyValues::number(const std::string& key) const {
  double out = 0.0;
  if (!parse_double(text(key), out) || !std::isfinite(out)) bad_value(key, "a finite number");
  return out;
}

double KeyValues::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t KeyValues::integer(const std::string& key) const {
  const std::string s = text(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, "an integer");
  return out;
}

std::int64_t KeyValues::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t KeyValues::unsigned_integer(const std::string& key) const {
  const std::string s = text(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, "a non-negative integer");
  return out;
}

bool KeyValues::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = text(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, "true or false");
}

std::vector<double> KeyValues::numbers(const std::string& key) const {
  const std::string s = text(key);
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    if (!parse_double(trim(item), v) || !std::isfinite(v)) bad_value(key, "a comma-separated list of numbers");
    out.push_back(v);
  }
  return out;
}

std::vector<double> KeyValues::numbers(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? numbers(key) : fallback;
}

void KeyValues::reject_unconsumed() const {
  std::string unknown;
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  require(unknown.empty(), ErrorCategory::config, source_ + ": unknown key(s): " + unknown);
}

}  // namespace ldct::io
