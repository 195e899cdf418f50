#include "ldct/kernels/backproject.hpp"

#include <cmath>
#include <vector>

namespace ldct::kernels {

namespace {

inline double sample(const double* q, std::size_t bins, double u) {
  if (u < 0.0 || u > static_cast<double>(bins - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= bins) return q[bins - 1];
  const double f = u - static_cast<double>(i);
  return q[i] + f * (q[i + 1] - q[i]);
}

}  // namespace

void backproject(const BackprojectDims& d, std::span<const double> angles,
                 std::span<const double> filtered, std::span<double> image) {
  const double half_bins = 0.5 * (static_cast<double>(d.bins) - 1.0);
  const double half_grid = 0.5 * (static_cast<double>(d.grid) - 1.0);
  std::vector<double> cx(d.views), sy(d.views);
  for (std::size_t v = 0; v < d.views; ++v) {
    cx[v] = std::cos(angles[v]) * d.pixel_spacing / d.bin_spacing;
    sy[v] = std::sin(angles[v]) * d.pixel_spacing / d.bin_spacing;
  }
  const auto rows = static_cast<std::ptrdiff_t>(d.grid);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double y = half_grid - static_cast<double>(r);
    double* out = image.data() + static_cast<std::size_t>(r) * d.grid;
    for (std::size_t c = 0; c < d.grid; ++c) out[c] = 0.0;
    for (std::size_t v = 0; v < d.views; ++v) {
      const double* q = filtered.data() + v * d.bins;
      const double base = y * sy[v] + half_bins;
      for (std::size_t c = 0; c < d.grid; ++c) {
        const double x = static_cast<double>(c) - half_grid;
        out[c] += sample(q, d.bins, x * cx[v] + base);
      }
    }
    for (std::size_t c = 0; c < d.grid; ++c) out[c] *= d.weight;
  }
}

namespace reference {

void backproject(const BackprojectDims& d, std::span<const double> angles,
                 std::span<const double> filtered, std::span<double> image) {
  for (std::size_t r = 0; r < d.grid; ++r) {
    const double y = (0.5 * (static_cast<double>(d.grid) - 1.0) - static_cast<double>(r)) * d.pixel_spacing;
    for (std::size_t c = 0; c < d.grid; ++c) {
      const double x = (static_cast<double>(c) - 0.5 * (static_cast<double>(d.grid) - 1.0)) * d.pixel_spacing;
      double acc = 0.0;
      for (std::size_t v = 0; v < d.views; ++v) {
        const double s = x * std::cos(angles[v]) + y * std::sin(angles[v]);
        const double u = s / d.bin_spacing + 0.5 * (static_cast<double>(d.bins) - 1.0);
        acc += sample(filtered.data() + v * d.bins, d.bins, u);
      }
      image[r * d.grid + c] = d.weight * acc;
    }
  }
}

}  // namespace reference

}  // namespace ldct::kernels
