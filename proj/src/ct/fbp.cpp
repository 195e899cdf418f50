#include <cmath>
#include <numbers>

#include "ldct/ct/fft.hpp"
#include "ldct/ct/radon.hpp"
#include "ldct/error.hpp"
#include "ldct/kernels/backproject.hpp"

namespace ldct::ct {

namespace {
std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}
}  // namespace

std::vector<double> ramp_response(std::size_t padded_length, double bin_spacing, FilterKind kind) {
  const std::size_t L = padded_length;
  require(L >= 4 && (L & (L - 1)) == 0, ErrorCategory::invalid_argument, "ramp filter length must be a power of two");
  const double d = bin_spacing;
  std::vector<double> h(L, 0.0);
  h[0] = 1.0 / (4.0 * d * d);
  for (std::size_t k = 1; k <= L / 2; ++k) {
    if (k % 2 == 0) continue;
    const double v = -1.0 / (static_cast<double>(k * k) * std::numbers::pi * std::numbers::pi * d * d);
    h[k] = v;
    h[L - k] = v;
  }
  RealFft fft(L);
  std::vector<std::complex<double>> spec(L / 2 + 1);
  fft.forward(h, spec);
  std::vector<double> response(L / 2 + 1);
  for (std::size_t k = 0; k < response.size(); ++k) {
    // h is even, so the transform is real; the factor d turns the discrete
    // convolution into a Riemann sum.
    double r = spec[k].real() * d;
    if (kind == FilterKind::hann)
      r *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(L / 2)));
    response[k] = r;
  }
  return response;
}

Sinogram ramp_filter(const Sinogram& sino) {
  const auto& g = sino.geometry();
  for (double v : sino.values())
    require(std::isfinite(v), ErrorCategory::invalid_argument, "fbp: sinogram contains non-finite values");
  const std::size_t L = next_pow2(2 * g.n_bins);
  const auto response = ramp_response(L, g.bin_spacing, g.filter);
  RealFft fft(L);
  std::vector<double> padded(L), out(L);
  std::vector<std::complex<double>> spec(L / 2 + 1);
  Sinogram filtered(g);
  for (std::size_t v = 0; v < g.n_views; ++v) {
    std::fill(padded.begin(), padded.end(), 0.0);
    for (std::size_t b = 0; b < g.n_bins; ++b) padded[b] = sino(v, b);
    fft.forward(padded, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= response[k] / static_cast<double>(L);
    fft.inverse(spec, out);
    for (std::size_t b = 0; b < g.n_bins; ++b) filtered(v, b) = out[b];
  }
  return filtered;
}

Image2D fbp(const Sinogram& sino) {
  const auto& g = sino.geometry();
  g.validate();
  const Sinogram filtered = ramp_filter(sino);
  std::vector<double> angles(g.n_views);
  for (std::size_t v = 0; v < g.n_views; ++v) angles[v] = g.angle(v);
  kernels::BackprojectDims d{g.n_views, g.n_bins, g.bin_spacing, g.grid, g.pixel_spacing,
                             std::numbers::pi / static_cast<double>(g.n_views)};
  Image2D img(g.grid, g.grid, g.pixel_spacing);
  kernels::backproject(d, angles, filtered.values(), img.values());
  return img;
}

}  // namespace ldct::ct
