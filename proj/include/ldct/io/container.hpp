#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ldct::io {

/// Element type codes of the "LDCT" container.
enum class DType : std::uint8_t { u8 = 0, f32 = 1, f64 = 2 };

std::size_t dtype_size(DType dtype);

struct Entry {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> extents;
  std::vector<std::byte> payload;  // little-endian scalars

  std::uint64_t element_count() const;
  std::vector<float> as_f32() const;
  std::vector<double> as_f64() const;
  /// Reads f32 or f64 payloads as double.
  std::vector<double> as_real() const;
  std::string as_text() const;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Ordered collection of named n-dimensional arrays.
///
/// Layout: magic "LDCT", u16 version, u32 entry count, then per entry a u32
/// name length, UTF-8 name bytes, u8 dtype code, u8 rank, rank u64 extents and
/// the raw little-endian payload. All integers are little-endian.
class Container {
 public:
  static constexpr std::uint16_t kVersion = 1;

  void add_f32(std::string name, std::vector<std::uint64_t> extents, std::span<const float> values);
  void add_f64(std::string name, std::vector<std::uint64_t> extents, std::span<const double> values);
  void add_text(std::string name, const std::string& text);
  void add(Entry entry);

  const Entry* find(const std::string& name) const;
  const Entry& at(const std::string& name) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  std::vector<std::byte> serialize() const;
  static Container parse(std::span<const std::byte> bytes);

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

  friend bool operator==(const Container&, const Container&) = default;

 private:
  std::vector<Entry> entries_;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace ldct::io
