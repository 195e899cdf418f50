#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ldct/image.hpp"
#include "ldct/io/container.hpp"

namespace ldct::metrics {

/// Sample standard deviation inside a centred disk of radius
/// `radius_fraction` * min(rows, cols) / 2. The disk must hold >= 100 pixels.
double noise_index(const Image2D& image, double radius_fraction = 0.4);

/// Pixel indices of the centred disk used by noise_index.
std::vector<std::size_t> central_roi(std::size_t rows, std::size_t cols, double radius_fraction);

/// Attenuation (1/cm) to Hounsfield units.
Image2D to_hu(const Image2D& attenuation, double mu_water = 0.2);

struct Patch {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t rows = 64;
  std::size_t cols = 64;
};

struct NPSResult {
  std::size_t rows = 0;  // patch extents
  std::size_t cols = 0;
  double du = 0.0;  // cycles/cm along columns
  double dv = 0.0;  // cycles/cm along rows
  std::vector<double> nps2d;  // rows x cols, unshifted DFT layout, value^2 cm^2
  std::vector<double> radial_frequency;  // bin centres, cycles/cm
  std::vector<double> radial_power;      // mean power per bin
  std::vector<std::size_t> radial_count;
  std::size_t nyquist_bins = 0;  // bins with centre <= Nyquist
  std::size_t realizations = 0;
  std::size_t patches = 0;

  /// sum nps2d * du * dv, equal to the pixel variance of the noise.
  double integral() const;
};

/// Noise power spectrum of an ensemble of co-registered images.
///
/// Every patch of every realization has the mean patch subtracted (the
/// ensemble mean, or `reference_mean` when given) before its periodogram is
/// accumulated with normalisation dx dy / (Nx Ny). With the ensemble mean the
/// result is scaled by R / (R - 1) to remove the bias of the estimated mean.
NPSResult nps(std::span<const Image2D> realizations, std::span<const Patch> patches,
              const Image2D* reference_mean = nullptr);

/// Radial binning of a 2D spectrum with bin width min(du, dv); bin i covers
/// radii rounding to i. Every sample lands in exactly one bin.
void radial_average(NPSResult& result);

/// Pearson correlation of the radial profiles up to Nyquist; 0 when either
/// profile is constant.
double nps_similarity(const NPSResult& a, const NPSResult& b);

/// `frequency_per_cm,power` rows of the radial profile.
void write_nps_text(const std::filesystem::path& path, const NPSResult& result);
void add_nps(io::Container& out, const NPSResult& result, const std::string& prefix);

double mean(std::span<const double> values);
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace ldct::metrics
