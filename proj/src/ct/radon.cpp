#include "ldct/ct/radon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldct/error.hpp"

namespace ldct::ct {

namespace {

// Bilinear sample at fractional (row, col); zero outside the grid.
inline double bilinear(const Image2D& img, double row, double col) {
  const double fr = std::floor(row), fc = std::floor(col);
  const auto r0 = static_cast<std::ptrdiff_t>(fr), c0 = static_cast<std::ptrdiff_t>(fc);
  const double wr = row - fr, wc = col - fc;
  const auto rows = static_cast<std::ptrdiff_t>(img.rows()), cols = static_cast<std::ptrdiff_t>(img.cols());
  auto px = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    return (r < 0 || c < 0 || r >= rows || c >= cols) ? 0.0
                                                      : img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  return (1.0 - wr) * ((1.0 - wc) * px(r0, c0) + wc * px(r0, c0 + 1)) +
         wr * ((1.0 - wc) * px(r0 + 1, c0) + wc * px(r0 + 1, c0 + 1));
}

// Parameter interval of t for which |origin + t * dir| <= half along one axis.
inline void clip_axis(double origin, double dir, double half, double& lo, double& hi) {
  if (std::abs(dir) < 1e-15) {
    if (std::abs(origin) > half) {
      lo = 1.0;
      hi = -1.0;
    }
    return;
  }
  double a = (-half - origin) / dir, b = (half - origin) / dir;
  if (a > b) std::swap(a, b);
  lo = std::max(lo, a);
  hi = std::min(hi, b);
}

}  // namespace

Sinogram radon(const Image2D& image, const ScanGeometry& geom) {
  geom.validate();
  require(image.rows() == geom.grid && image.cols() == geom.grid && image.spacing() == geom.pixel_spacing,
          ErrorCategory::shape_mismatch,
          "radon: image " + image.shape_string() + " does not match a " + std::to_string(geom.grid) +
              " grid with the scan geometry's pixel spacing");
  Sinogram sino(geom);
  const double dx = geom.pixel_spacing;
  const double step = 0.5 * dx;
  const double half_diag = 0.5 * std::sqrt(2.0) * static_cast<double>(geom.grid) * dx;
  const auto samples = static_cast<std::ptrdiff_t>(std::ceil(2.0 * half_diag / step)) + 1;
  const double mid = 0.5 * static_cast<double>(samples - 1);
  // bilinear support reaches one pixel beyond the outer pixel centres
  const double half_box = 0.5 * (static_cast<double>(geom.grid) + 1.0) * dx;
  const double centre = 0.5 * (static_cast<double>(geom.grid) - 1.0);
  const auto views = static_cast<std::ptrdiff_t>(geom.n_views);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < views; ++v) {
    const double theta = geom.angle(static_cast<std::size_t>(v));
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t b = 0; b < geom.n_bins; ++b) {
      const double pos = geom.bin_position(b);
      // ray: (pos c, pos s) + t (-s, c)
      const double ox = pos * c, oy = pos * s;
      double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
      clip_axis(ox, -s, half_box, lo, hi);
      clip_axis(oy, c, half_box, lo, hi);
      if (lo > hi) continue;
      const auto k0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(lo / step + mid)));
      const auto k1 = std::min<std::ptrdiff_t>(samples - 1, static_cast<std::ptrdiff_t>(std::ceil(hi / step + mid)));
      double acc = 0.0;
      for (std::ptrdiff_t k = k0; k <= k1; ++k) {
        const double t = (static_cast<double>(k) - mid) * step;
        const double x = ox - t * s, y = oy + t * c;
        acc += bilinear(image, centre - y / dx, x / dx + centre);
      }
      sino(static_cast<std::size_t>(v), b) = acc * step;
    }
  }
  return sino;
}

}  // namespace ldct::ct
