#include "ldct/ct/geometry.hpp"

#include <cmath>
#include <numbers>

#include "ldct/error.hpp"

namespace ldct::ct {

std::string to_string(FilterKind kind) { return kind == FilterKind::hann ? "hann" : "ram-lak"; }

FilterKind filter_from_string(const std::string& name) {
  if (name == "ram-lak" || name == "ramlak") return FilterKind::ram_lak;
  if (name == "hann") return FilterKind::hann;
  fail(ErrorCategory::config, "filter: unknown kind '" + name + "' (ram-lak | hann)");
}

ScanGeometry ScanGeometry::for_grid(std::size_t grid, double pixel_spacing, std::size_t n_views,
                                    FilterKind filter) {
  ScanGeometry g;
  g.grid = grid;
  g.pixel_spacing = pixel_spacing;
  g.n_views = n_views;
  g.bin_spacing = pixel_spacing;
  g.n_bins = static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(grid))) + 2;
  g.filter = filter;
  return g;
}

void ScanGeometry::validate() const {
  require(n_views >= 1, ErrorCategory::config, "views: need at least one view");
  require(n_bins >= 1, ErrorCategory::config, "bins: need at least one detector bin");
  require(grid >= 1, ErrorCategory::config, "grid: must be positive");
  require(pixel_spacing > 0.0, ErrorCategory::config, "pixel_cm: must be positive");
  require(bin_spacing > 0.0, ErrorCategory::config, "bin_cm: must be positive");
  require(static_cast<double>(n_bins) * bin_spacing >=
              std::numbers::sqrt2 * static_cast<double>(grid) * pixel_spacing * (1.0 - 1e-12),
          ErrorCategory::config, "bins: detector does not cover the image diagonal");
}

double ScanGeometry::angle(std::size_t view) const {
  return static_cast<double>(view) * std::numbers::pi / static_cast<double>(n_views);
}

double ScanGeometry::bin_position(std::size_t bin) const {
  return (static_cast<double>(bin) - 0.5 * (static_cast<double>(n_bins) - 1.0)) * bin_spacing;
}

Sinogram::Sinogram(ScanGeometry geom, double fill)
    : geom_(geom), values_(geom.n_views * geom.n_bins, fill) {}

}  // namespace ldct::ct
