#include "ldct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "ldct/ct/fft.hpp"
#include "ldct/error.hpp"

namespace ldct::metrics {

std::vector<std::size_t> central_roi(std::size_t rows, std::size_t cols, double radius_fraction) {
  require(radius_fraction > 0.0 && radius_fraction <= 1.0, ErrorCategory::invalid_argument,
          "noise_index: ROI radius fraction must be in (0, 1]");
  const double radius = radius_fraction * 0.5 * static_cast<double>(std::min(rows, cols));
  const double cr = 0.5 * (static_cast<double>(rows) - 1.0), cc = 0.5 * (static_cast<double>(cols) - 1.0);
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double dr = static_cast<double>(r) - cr, dc = static_cast<double>(c) - cc;
      if (dr * dr + dc * dc <= radius * radius) idx.push_back(r * cols + c);
    }
  return idx;
}

double noise_index(const Image2D& image, double radius_fraction) {
  const auto idx = central_roi(image.rows(), image.cols(), radius_fraction);
  require(idx.size() >= 100, ErrorCategory::invalid_argument,
          "noise_index: ROI holds " + std::to_string(idx.size()) + " pixels, need at least 100");
  double mu = 0.0;
  for (auto i : idx) mu += image[i];
  mu /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (auto i : idx) ss += (image[i] - mu) * (image[i] - mu);
  return std::sqrt(ss / static_cast<double>(idx.size() - 1));
}

Image2D to_hu(const Image2D& attenuation, double mu_water) {
  require(mu_water > 0.0, ErrorCategory::invalid_argument, "to_hu: water attenuation must be > 0");
  Image2D hu = attenuation;
  for (double& v : hu.values()) v = 1000.0 * (v - mu_water) / mu_water;
  return hu;
}

double NPSResult::integral() const {
  double s = 0.0;
  for (double v : nps2d) s += v;
  return s * du * dv;
}

NPSResult nps(std::span<const Image2D> realizations, std::span<const Patch> patches, const Image2D* reference_mean) {
  require(realizations.size() >= 2, ErrorCategory::invalid_argument, "nps: need at least 2 realizations");
  require(!patches.empty(), ErrorCategory::invalid_argument, "nps: no patches");
  const Image2D& first = realizations.front();
  for (const auto& img : realizations)
    require(img.same_grid(first), ErrorCategory::shape_mismatch,
            "nps: realization " + img.shape_string() + " differs from " + first.shape_string());
  const std::size_t pr = patches.front().rows, pc = patches.front().cols;
  for (const auto& p : patches) {
    require(p.rows == pr && p.cols == pc && pr >= 2 && pc >= 2, ErrorCategory::invalid_argument,
            "nps: all patches must share one size of at least 2x2");
    require(p.row + p.rows <= first.rows() && p.col + p.cols <= first.cols(), ErrorCategory::invalid_argument,
            "nps: patch at (" + std::to_string(p.row) + ", " + std::to_string(p.col) + ") exceeds image " +
                first.shape_string());
  }
  Image2D mean_image(first.rows(), first.cols(), first.spacing());
  double bias = 1.0;
  if (reference_mean) {
    require(reference_mean->same_grid(first), ErrorCategory::shape_mismatch,
            "nps: reference mean " + reference_mean->shape_string() + " differs from " + first.shape_string());
    mean_image = *reference_mean;
  } else {
    for (const auto& img : realizations) mean_image += img;
    mean_image *= 1.0 / static_cast<double>(realizations.size());
    const double r = static_cast<double>(realizations.size());
    bias = r / (r - 1.0);
  }

  NPSResult res;
  res.rows = pr;
  res.cols = pc;
  const double dx = first.spacing();
  res.du = 1.0 / (static_cast<double>(pc) * dx);
  res.dv = 1.0 / (static_cast<double>(pr) * dx);
  res.nps2d.assign(pr * pc, 0.0);
  res.realizations = realizations.size();
  res.patches = patches.size();
  std::vector<double> buf(pr * pc);
  for (const auto& img : realizations) {
    for (const auto& p : patches) {
      for (std::size_t r = 0; r < pr; ++r)
        for (std::size_t c = 0; c < pc; ++c)
          buf[r * pc + c] = img(p.row + r, p.col + c) - mean_image(p.row + r, p.col + c);
      const auto power = ct::power_spectrum_2d(buf, pr, pc);
      for (std::size_t i = 0; i < power.size(); ++i) res.nps2d[i] += power[i];
    }
  }
  const double norm = bias * dx * dx / static_cast<double>(pr * pc) /
                      static_cast<double>(realizations.size() * patches.size());
  for (double& v : res.nps2d) v *= norm;
  radial_average(res);
  return res;
}

void radial_average(NPSResult& res) {
  const double width = std::min(res.du, res.dv);
  auto signed_index = [](std::size_t i, std::size_t n) {
    return i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
  };
  std::vector<std::size_t> bin(res.rows * res.cols);
  std::size_t max_bin = 0;
  for (std::size_t r = 0; r < res.rows; ++r)
    for (std::size_t c = 0; c < res.cols; ++c) {
      const double fv = signed_index(r, res.rows) * res.dv, fu = signed_index(c, res.cols) * res.du;
      const auto b = static_cast<std::size_t>(std::lround(std::hypot(fu, fv) / width));
      bin[r * res.cols + c] = b;
      max_bin = std::max(max_bin, b);
    }
  res.radial_power.assign(max_bin + 1, 0.0);
  res.radial_count.assign(max_bin + 1, 0);
  res.radial_frequency.resize(max_bin + 1);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    res.radial_power[bin[i]] += res.nps2d[i];
    ++res.radial_count[bin[i]];
  }
  const double nyquist = 0.5 * std::min(static_cast<double>(res.cols) * res.du, static_cast<double>(res.rows) * res.dv);
  res.nyquist_bins = 0;
  for (std::size_t b = 0; b <= max_bin; ++b) {
    res.radial_frequency[b] = static_cast<double>(b) * width;
    if (res.radial_count[b] > 0) res.radial_power[b] /= static_cast<double>(res.radial_count[b]);
    if (res.radial_frequency[b] <= nyquist + 1e-12 * nyquist) res.nyquist_bins = b + 1;
  }
}

double mean(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorCategory::shape_mismatch,
          "pearson: need two equally long series of at least 2 values");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double nps_similarity(const NPSResult& a, const NPSResult& b) {
  require(a.rows == b.rows && a.cols == b.cols && a.du == b.du && a.dv == b.dv &&
              a.radial_power.size() == b.radial_power.size(),
          ErrorCategory::shape_mismatch, "nps_similarity: frequency axes differ");
  const std::size_t n = a.nyquist_bins;
  return pearson(std::span(a.radial_power).first(n), std::span(b.radial_power).first(n));
}

void write_nps_text(const std::filesystem::path& path, const NPSResult& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + path.string());
  out << "frequency_per_cm,power\n" << std::setprecision(10);
  for (std::size_t b = 0; b < result.radial_power.size(); ++b)
    out << result.radial_frequency[b] << ',' << result.radial_power[b] << '\n';
  require(static_cast<bool>(out), ErrorCategory::io, "write failed: " + path.string());
}

void add_nps(io::Container& out, const NPSResult& result, const std::string& prefix) {
  out.add_f64(prefix + "nps2d", {result.rows, result.cols}, result.nps2d);
  const double axes[2] = {result.dv, result.du};
  out.add_f64(prefix + "frequency_spacing", {2}, axes);
  out.add_f64(prefix + "radial_frequency", {result.radial_frequency.size()}, result.radial_frequency);
  out.add_f64(prefix + "radial_power", {result.radial_power.size()}, result.radial_power);
}

}  // namespace ldct::metrics
