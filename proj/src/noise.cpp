#include "ldct/noise.hpp"

#include <cmath>
#include <random>

#include "ldct/ct/radon.hpp"
#include "ldct/error.hpp"

namespace ldct::noise {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// splitmix64 sequence as a UniformRandomBitGenerator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;
  explicit StreamEngine(std::uint64_t key) : state_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace

void DoseSpec::validate() const {
  require(std::isfinite(tube_current_ma) && tube_current_ma > 0.0, ErrorCategory::invalid_argument,
          "dose: tube current must be > 0 mA");
  require(std::isfinite(photons_per_ma) && photons_per_ma > 0.0, ErrorCategory::invalid_argument,
          "dose: photons per mA must be > 0");
  require(std::isfinite(electronic_sigma) && electronic_sigma >= 0.0, ErrorCategory::invalid_argument,
          "dose: electronic noise sigma must be >= 0");
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t view, std::uint64_t bin) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ view) ^ (bin * 0xd6e8feb86659fd93ULL));
}

ct::Sinogram insert_noise(const ct::Sinogram& sino, const DoseSpec& dose, NoiseStats* stats) {
  dose.validate();
  for (double p : sino.values())
    require(std::isfinite(p), ErrorCategory::invalid_argument, "insert_noise: sinogram contains non-finite values");
  const double i0 = dose.incident_photons();
  ct::Sinogram out(sino.geometry());
  const auto views = static_cast<std::ptrdiff_t>(sino.views());
  const std::size_t bins = sino.bins();
  std::size_t negative = 0, starved = 0;
#pragma omp parallel for schedule(static) reduction(+ : negative, starved)
  for (std::ptrdiff_t v = 0; v < views; ++v) {
    for (std::size_t b = 0; b < bins; ++b) {
      double p = sino(static_cast<std::size_t>(v), b);
      if (p < 0.0) {
        p = 0.0;
        ++negative;
      }
      StreamEngine engine(stream_key(dose.seed, static_cast<std::uint64_t>(v), b));
      std::poisson_distribution<std::int64_t> poisson(i0 * std::exp(-p));
      double counts = static_cast<double>(poisson(engine));
      if (dose.electronic_sigma > 0.0) counts += std::normal_distribution<double>(0.0, dose.electronic_sigma)(engine);
      if (counts < 1.0) {
        counts = 1.0;
        ++starved;
      }
      out(static_cast<std::size_t>(v), b) = std::log(i0 / counts);
    }
  }
  if (stats) {
    stats->clamped_negative += negative;
    stats->starved += starved;
  }
  return out;
}

Image2D reconstruct_clean(const Image2D& object, const ct::ScanGeometry& geom) {
  return quantize_f32(ct::fbp(ct::radon(object, geom)));
}

Image2D simulate_ldct(const Image2D& object, const ct::ScanGeometry& geom, const DoseSpec& dose,
                      NoiseStats* stats) {
  dose.validate();
  return quantize_f32(ct::fbp(insert_noise(ct::radon(object, geom), dose, stats)));
}

double tube_current_for_noise_index(double ma_ref, double ni_ref, double ni_target) {
  require(ma_ref > 0.0 && ni_ref > 0.0 && ni_target > 0.0, ErrorCategory::invalid_argument,
          "noise-index calibration needs positive tube current and noise indices");
  const double ratio = ni_ref / ni_target;
  return ma_ref * ratio * ratio;
}

}  // namespace ldct::noise
