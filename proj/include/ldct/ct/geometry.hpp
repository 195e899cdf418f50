#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ldct::ct {

enum class FilterKind { ram_lak, hann };

std::string to_string(FilterKind kind);
FilterKind filter_from_string(const std::string& name);

/// Parallel-beam scan of an n x n grid. View angles are view * pi / n_views;
/// detector bin b sits at (b - (n_bins - 1) / 2) * bin_spacing.
struct ScanGeometry {
  std::size_t n_views = 180;
  std::size_t n_bins = 0;
  double bin_spacing = 0.0;  // cm
  std::size_t grid = 0;
  double pixel_spacing = 0.0;  // cm
  FilterKind filter = FilterKind::ram_lak;

  /// Geometry with bin_spacing = pixel_spacing and the smallest bin count
  /// (plus a two-bin margin) covering the image diagonal.
  static ScanGeometry for_grid(std::size_t grid, double pixel_spacing, std::size_t n_views = 180,
                               FilterKind filter = FilterKind::ram_lak);

  /// Throws config errors naming the offending field.
  void validate() const;

  double angle(std::size_t view) const;
  double bin_position(std::size_t bin) const;

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;
};

/// Line integrals (attenuation x length), view-major.
class Sinogram {
 public:
  Sinogram() = default;
  explicit Sinogram(ScanGeometry geom, double fill = 0.0);

  const ScanGeometry& geometry() const noexcept { return geom_; }
  std::size_t views() const noexcept { return geom_.n_views; }
  std::size_t bins() const noexcept { return geom_.n_bins; }
  double& operator()(std::size_t view, std::size_t bin) { return values_[view * geom_.n_bins + bin]; }
  double operator()(std::size_t view, std::size_t bin) const { return values_[view * geom_.n_bins + bin]; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  ScanGeometry geom_;
  std::vector<double> values_;
};

}  // namespace ldct::ct
