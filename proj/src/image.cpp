#include "ldct/image.hpp"

#include "ldct/error.hpp"

namespace ldct {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::shape_mismatch: return "shape_mismatch";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::state: return "state";
  }
  return "unknown";
}

Image2D::Image2D(std::size_t rows, std::size_t cols, double spacing_cm, double fill)
    : rows_(rows), cols_(cols), spacing_(spacing_cm), values_(rows * cols, fill) {
  require(spacing_cm > 0.0, ErrorCategory::invalid_argument, "pixel spacing must be positive");
}

Image2D::Image2D(std::size_t rows, std::size_t cols, double spacing_cm, std::vector<double> values)
    : rows_(rows), cols_(cols), spacing_(spacing_cm), values_(std::move(values)) {
  require(spacing_cm > 0.0, ErrorCategory::invalid_argument, "pixel spacing must be positive");
  require(values_.size() == rows * cols, ErrorCategory::shape_mismatch,
          "image value count does not match " + shape_string());
}

std::string Image2D::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {
void check_same(const Image2D& a, const Image2D& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCategory::shape_mismatch,
          "image shapes differ: " + a.shape_string() + " vs " + b.shape_string());
}
}  // namespace

Image2D& Image2D::operator+=(const Image2D& other) {
  check_same(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Image2D& Image2D::operator-=(const Image2D& other) {
  check_same(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Image2D& Image2D::operator*=(double factor) {
  for (auto& v : values_) v *= factor;
  return *this;
}

Image2D Image2D::crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const {
  require(row + rows <= rows_ && col + cols <= cols_, ErrorCategory::invalid_argument,
          "crop exceeds image bounds " + shape_string());
  Image2D out(rows, cols, spacing_);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = (*this)(row + r, col + c);
  return out;
}

Image2D operator+(Image2D a, const Image2D& b) { return a += b; }
Image2D operator-(Image2D a, const Image2D& b) { return a -= b; }
Image2D operator*(double factor, Image2D a) { return a *= factor; }

Image2D quantize_f32(Image2D image) {
  for (auto& v : image.values()) v = static_cast<double>(static_cast<float>(v));
  return image;
}

void add_image(io::Container& container, const Image2D& image, io::DType dtype,
               const std::string& name) {
  const std::vector<std::uint64_t> extents{image.rows(), image.cols()};
  if (dtype == io::DType::f32) {
    std::vector<float> f(image.values().begin(), image.values().end());
    container.add_f32(name, extents, f);
  } else {
    require(dtype == io::DType::f64, ErrorCategory::invalid_argument, "images store f32 or f64");
    container.add_f64(name, extents, image.values());
  }
  const double spacing = image.spacing();
  container.add_f64(name + ".spacing_cm", {}, std::span<const double>(&spacing, 1));
}

Image2D get_image(const io::Container& container, const std::string& name) {
  const auto& e = container.at(name);
  require(e.extents.size() == 2, ErrorCategory::format, "entry '" + name + "' is not 2D");
  const auto spacing = container.at(name + ".spacing_cm").as_f64();
  require(spacing.size() == 1, ErrorCategory::format, "bad spacing entry for '" + name + "'");
  return Image2D(e.extents[0], e.extents[1], spacing[0], e.as_real());
}

void save_image(const std::filesystem::path& path, const Image2D& image, io::DType dtype) {
  io::Container c;
  add_image(c, image, dtype);
  c.write(path);
}

Image2D load_image(const std::filesystem::path& path) {
  return get_image(io::Container::read(path));
}

}  // namespace ldct
