#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ldct::ct {

/// Real-to-complex 1D transform of fixed length, backed by FFTW. Unnormalised
/// in both directions. Instances are not shared between threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  /// out.size() == n / 2 + 1
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  void* spectrum_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// |DFT|^2 of a rows x cols real array (row-major), full (unshifted) layout.
std::vector<double> power_spectrum_2d(std::span<const double> data, std::size_t rows, std::size_t cols);

}  // namespace ldct::ct
