#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ldct/io/container.hpp"

namespace ldct {

/// Dense row-major 2D scalar field with square pixels.
///
/// Row 0 is the top of the image (largest y). Values are attenuation in 1/cm
/// unless stated otherwise. Storage is double; images that come out of the
/// scanner chain are rounded to single precision so that they survive the f32
/// container exactly and differences of two such images are exact in double.
class Image2D {
 public:
  Image2D() = default;
  Image2D(std::size_t rows, std::size_t cols, double spacing_cm, double fill = 0.0);
  Image2D(std::size_t rows, std::size_t cols, double spacing_cm, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  double spacing() const noexcept { return spacing_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_grid(const Image2D& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && spacing_ == other.spacing_;
  }
  std::string shape_string() const;

  Image2D& operator+=(const Image2D& other);
  Image2D& operator-=(const Image2D& other);
  Image2D& operator*=(double factor);

  /// Sub-image with top-left corner (row, col).
  Image2D crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const;

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double spacing_ = 1.0;
  std::vector<double> values_;
};

Image2D operator+(Image2D a, const Image2D& b);
Image2D operator-(Image2D a, const Image2D& b);
Image2D operator*(double factor, Image2D a);

/// Rounds every pixel to the nearest float.
Image2D quantize_f32(Image2D image);

/// Stores `image` (plus its spacing) as entries "image" and "spacing_cm".
void add_image(io::Container& container, const Image2D& image, io::DType dtype = io::DType::f32,
               const std::string& name = "image");
Image2D get_image(const io::Container& container, const std::string& name = "image");

void save_image(const std::filesystem::path& path, const Image2D& image,
                io::DType dtype = io::DType::f32);
Image2D load_image(const std::filesystem::path& path);

}  // namespace ldct
