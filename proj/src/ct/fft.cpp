#include "ldct/ct/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "ldct/error.hpp"

namespace ldct::ct {

namespace {
// FFTW planning is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n >= 2, ErrorCategory::invalid_argument, "FFT length must be >= 2");
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  spectrum_ = spec;
  const int len = static_cast<int>(n);
  forward_plan_ = fftw_plan_dft_r2c_1d(len, real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(len, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  require(in.size() == n_ && out.size() == n_ / 2 + 1, ErrorCategory::shape_mismatch, "RealFft::forward size");
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const auto* spec = static_cast<const fftw_complex*>(spectrum_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec[k][0], spec[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  require(in.size() == n_ / 2 + 1 && out.size() == n_, ErrorCategory::shape_mismatch, "RealFft::inverse size");
  auto* spec = static_cast<fftw_complex*>(spectrum_);
  for (std::size_t k = 0; k < in.size(); ++k) {
    spec[k][0] = in[k].real();
    spec[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy(real_, real_ + n_, out.begin());
}

std::vector<double> power_spectrum_2d(std::span<const double> data, std::size_t rows, std::size_t cols) {
  require(data.size() == rows * cols && rows > 0 && cols > 0, ErrorCategory::shape_mismatch,
          "power_spectrum_2d size");
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    buf = fftw_alloc_complex(rows * cols);
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < rows * cols; ++i) {
    buf[i][0] = data[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> power(rows * cols);
  for (std::size_t i = 0; i < rows * cols; ++i) power[i] = buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(buf);
  }
  return power;
}

}  // namespace ldct::ct
