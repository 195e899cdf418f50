#pragma once

#include <cstdint>

#include "ldct/ct/geometry.hpp"
#include "ldct/image.hpp"

namespace ldct::noise {

/// One exposure setting of the virtual scanner.
struct DoseSpec {
  double tube_current_ma = 90.0;
  double photons_per_ma = 1000.0;  // incident photons per bin per mA
  double electronic_sigma = 0.0;   // counts
  std::uint64_t seed = 0;

  double incident_photons() const noexcept { return photons_per_ma * tube_current_ma; }
  /// Throws invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const DoseSpec&, const DoseSpec&) = default;
};

struct NoiseStats {
  std::size_t clamped_negative = 0;  // line integrals below 0 treated as 0
  std::size_t starved = 0;           // bins whose count fell below 1
};

/// Poisson transmission noise plus optional Gaussian electronic noise,
/// re-logged as ln(I0 / max(N, 1)). Each (view, bin) draws from its own
/// stream keyed by (seed, view, bin), so the result does not depend on
/// evaluation order.
ct::Sinogram insert_noise(const ct::Sinogram& sino, const DoseSpec& dose, NoiseStats* stats = nullptr);

/// Noiseless scan of `object`: fbp(radon(object)), rounded to f32.
Image2D reconstruct_clean(const Image2D& object, const ct::ScanGeometry& geom);

/// fbp(insert_noise(radon(object), dose)), rounded to f32.
Image2D simulate_ldct(const Image2D& object, const ct::ScanGeometry& geom, const DoseSpec& dose,
                      NoiseStats* stats = nullptr);

/// Tube current that moves the noise index from `ni_ref` (measured at
/// `ma_ref`) to `ni_target`, using variance proportional to 1/mA.
double tube_current_for_noise_index(double ma_ref, double ni_ref, double ni_target);

/// Key of a counter-based stream; exposed for tests.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t view, std::uint64_t bin) noexcept;

}  // namespace ldct::noise
