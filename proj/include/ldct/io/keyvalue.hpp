#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ldct::io {

/// `key = value` text: one pair per line, '#' starts a comment, blank lines
/// ignored, duplicate keys rejected. Typed getters throw config errors that
/// name the key. Keys read through a getter are marked consumed so callers
/// can reject everything else with reject_unconsumed().
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& source = "config");
  static KeyValues read(const std::filesystem::path& path);
  std::string serialize() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<double>& values);

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool boolean(const std::string& key, bool fallback) const;
  /// Comma-separated numbers; an empty value is an empty list.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

  /// Throws a config error listing keys no getter has read.
  void reject_unconsumed() const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }

 private:
  const std::string* lookup(const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const;

  std::string source_ = "config";
  std::vector<std::pair<std::string, std::string>> entries_;
  mutable std::set<std::string> consumed_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace ldct::io
