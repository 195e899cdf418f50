#pragma once

#include <vector>

#include "ldct/ct/geometry.hpp"
#include "ldct/image.hpp"

namespace ldct::ct {

/// Forward projection: each ray is sampled with bilinear interpolation at
/// steps of half a pixel. Linear in the image; parallel over views.
Sinogram radon(const Image2D& image, const ScanGeometry& geom);

/// Frequency response (length L / 2 + 1) of the band-limited ramp filter
/// built from the spatial Ram-Lak kernel, optionally Hann-apodised, for
/// zero-padded length L.
std::vector<double> ramp_response(std::size_t padded_length, double bin_spacing, FilterKind kind);

/// Ramp-filters every view (zero padded to the next power of two >= 2 bins).
Sinogram ramp_filter(const Sinogram& sino);

/// Filtered back projection scaled by pi / n_views.
Image2D fbp(const Sinogram& sino);

}  // namespace ldct::ct
