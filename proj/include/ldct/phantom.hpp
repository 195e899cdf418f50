#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ldct/image.hpp"

namespace ldct::phantom {

/// Ellipse in object coordinates, where the unit disk is inscribed in the
/// image grid. `value` is an additive attenuation in 1/cm.
struct EllipseSpec {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;      // semi-axis along the rotated x direction
  double b = 1.0;      // semi-axis along the rotated y direction
  double angle = 0.0;  // radians, counter-clockwise
  double value = 0.0;

  bool contains(double x, double y) const;
  friend bool operator==(const EllipseSpec&, const EllipseSpec&) = default;
};

struct Phantom {
  std::vector<EllipseSpec> ellipses;
  std::size_t n = 0;
  double spacing = 0.0;
  Image2D image;
};

/// Object coordinates of the centre of pixel (row, col) on an n x n grid.
double pixel_x(std::size_t col, std::size_t n);
double pixel_y(std::size_t row, std::size_t n);

/// Sums the values of all ellipses containing each pixel centre; pixels
/// outside the unit disk are 0. Requires n >= 16.
Image2D render(std::span<const EllipseSpec> spec, std::size_t n, double spacing_cm);

/// Shepp-Logan head geometry. `modified` selects the higher-contrast
/// intensities commonly used for display; `scale` multiplies every value.
std::vector<EllipseSpec> shepp_logan(bool modified = true, double scale = 1.0);

/// One uniform disk centred in the field of view, used for noise-index
/// calibration and noise power spectra.
std::vector<EllipseSpec> uniform_disk(double radius = 0.8, double value = 0.2);

struct RandomPhantomConfig {
  int min_count = 2;  // interior ellipses, body excluded
  int max_count = 6;
  double body_min_axis = 0.6;
  double body_max_axis = 0.85;
  double body_min_value = 0.18;
  double body_max_value = 0.22;
  double min_axis = 0.04;
  double max_axis = 0.25;
  double min_contrast = -0.04;
  double max_contrast = 0.15;
};

/// Body ellipse plus a seeded number of interior ellipses contained in it.
/// Negative contrasts are limited so that the rendered image stays >= 0.
Phantom random_phantom(std::uint64_t seed, const RandomPhantomConfig& cfg, std::size_t n,
                       double spacing_cm);

}  // namespace ldct::phantom
