#include "ldct/io/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "ldct/error.hpp"

namespace ldct::io {

static_assert(std::endian::native == std::endian::little,
              "the LDCT container stores raw little-endian scalars");

namespace {

constexpr char kMagic[4] = {'L', 'D', 'C', 'T'};

template <typename T>
void put(std::vector<std::byte>& out, T value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value{};
    std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
    return value;
  }

  std::span<const std::byte> take(std::size_t n) {
    require(n <= bytes_.size() - pos_, ErrorCategory::format, "LDCT container truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
std::vector<std::byte> to_bytes(std::span<const T> values) {
  std::vector<std::byte> out(values.size_bytes());
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<std::byte>& payload) {
  std::vector<T> out(payload.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), payload.data(), out.size() * sizeof(T));
  return out;
}

std::uint64_t product(const std::vector<std::uint64_t>& extents) {
  std::uint64_t n = 1;
  for (auto e : extents) n *= e;
  return n;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::u8: return 1;
    case DType::f32: return 4;
    case DType::f64: return 8;
  }
  fail(ErrorCategory::format, "unknown dtype code " + std::to_string(static_cast<int>(dtype)));
}

std::uint64_t Entry::element_count() const { return product(extents); }

std::vector<float> Entry::as_f32() const {
  require(dtype == DType::f32, ErrorCategory::format, "entry '" + name + "' is not f32");
  return from_bytes<float>(payload);
}

std::vector<double> Entry::as_f64() const {
  require(dtype == DType::f64, ErrorCategory::format, "entry '" + name + "' is not f64");
  return from_bytes<double>(payload);
}

std::vector<double> Entry::as_real() const {
  if (dtype == DType::f64) return as_f64();
  auto f = as_f32();
  return {f.begin(), f.end()};
}

std::string Entry::as_text() const {
  require(dtype == DType::u8, ErrorCategory::format, "entry '" + name + "' is not text");
  std::string s(payload.size(), '\0');
  if (!s.empty()) std::memcpy(s.data(), payload.data(), s.size());
  return s;
}

void Container::add_f32(std::string name, std::vector<std::uint64_t> extents,
                        std::span<const float> values) {
  require(product(extents) == values.size(), ErrorCategory::shape_mismatch,
          "entry '" + name + "': extents do not match value count");
  add(Entry{std::move(name), DType::f32, std::move(extents), to_bytes(values)});
}

void Container::add_f64(std::string name, std::vector<std::uint64_t> extents,
                        std::span<const double> values) {
  require(product(extents) == values.size(), ErrorCategory::shape_mismatch,
          "entry '" + name + "': extents do not match value count");
  add(Entry{std::move(name), DType::f64, std::move(extents), to_bytes(values)});
}

void Container::add_text(std::string name, const std::string& text) {
  std::vector<std::byte> bytes(text.size());
  if (!text.empty()) std::memcpy(bytes.data(), text.data(), text.size());
  add(Entry{std::move(name), DType::u8, {text.size()}, std::move(bytes)});
}

void Container::add(Entry entry) {
  require(find(entry.name) == nullptr, ErrorCategory::invalid_argument,
          "duplicate container entry '" + entry.name + "'");
  require(entry.payload.size() == entry.element_count() * dtype_size(entry.dtype),
          ErrorCategory::shape_mismatch, "entry '" + entry.name + "': payload size mismatch");
  require(entry.extents.size() <= 255, ErrorCategory::invalid_argument, "rank exceeds 255");
  entries_.push_back(std::move(entry));
}

const Entry* Container::find(const std::string& name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

const Entry& Container::at(const std::string& name) const {
  const Entry* e = find(name);
  require(e != nullptr, ErrorCategory::format, "container has no entry '" + name + "'");
  return *e;
}

std::vector<std::byte> Container::serialize() const {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    for (char c : e.name) out.push_back(static_cast<std::byte>(c));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.extents.size()));
    for (auto x : e.extents) put<std::uint64_t>(out, x);
    out.insert(out.end(), e.payload.begin(), e.payload.end());
  }
  return out;
}

Container Container::parse(std::span<const std::byte> bytes) {
  Reader in(bytes);
  auto magic = in.take(4);
  require(std::memcmp(magic.data(), kMagic, 4) == 0, ErrorCategory::format,
          "not an LDCT container (bad magic)");
  const auto version = in.get<std::uint16_t>();
  require(version == kVersion, ErrorCategory::format,
          "unsupported LDCT container version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  Container c;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const auto name_len = in.get<std::uint32_t>();
    auto name = in.take(name_len);
    e.name.assign(reinterpret_cast<const char*>(name.data()), name.size());
    const auto code = in.get<std::uint8_t>();
    require(code <= 2, ErrorCategory::format, "unknown dtype code " + std::to_string(code));
    e.dtype = static_cast<DType>(code);
    const auto rank = in.get<std::uint8_t>();
    for (unsigned r = 0; r < rank; ++r) e.extents.push_back(in.get<std::uint64_t>());
    auto payload = in.take(e.element_count() * dtype_size(e.dtype));
    e.payload.assign(payload.begin(), payload.end());
    c.add(std::move(e));
  }
  require(in.done(), ErrorCategory::format, "trailing bytes after LDCT container");
  return c;
}

void Container::write(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

Container Container::read(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse(bytes);
  } catch (const Error& e) {
    fail(e.category(), path.string() + ": " + e.what());
  }
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  require(static_cast<bool>(in), ErrorCategory::io, "failed reading " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    require(!ec, ErrorCategory::io, "cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCategory::io, "failed writing " + path.string());
}

}  // namespace ldct::io
