#pragma once

#include <cstddef>
#include <span>

namespace ldct::kernels {

/// Pixel-driven parallel-beam backprojection with linear interpolation
/// between detector bins. `filtered` is view-major [views x bins]; the image
/// is row-major grid x grid with row 0 at the top. Result is
/// image = weight * sum_views q(view, x cos + y sin); bins outside the
/// detector contribute 0.
struct BackprojectDims {
  std::size_t views = 0;
  std::size_t bins = 0;
  double bin_spacing = 1.0;
  std::size_t grid = 0;
  double pixel_spacing = 1.0;
  double weight = 1.0;
};

/// Parallel over image rows; each pixel sums views in index order.
void backproject(const BackprojectDims& d, std::span<const double> angles,
                 std::span<const double> filtered, std::span<double> image);

namespace reference {
void backproject(const BackprojectDims& d, std::span<const double> angles,
                 std::span<const double> filtered, std::span<double> image);
}  // namespace reference

}  // namespace ldct::kernels
