#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "ldct/image.hpp"
#include "ldct/nn/ops.hpp"

namespace ldct::testing {

/// |a - n| / max(|a|, |n|, floor). The floor sits above the finite-difference
/// roundoff (about eps |loss| / h) so vanishing gradients compare absolutely.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Max relative error between backprop gradients of the scalar built by
/// `build(tape)` and central differences over every parameter entry.
template <typename Build>
double gradcheck_params(nn::ModelParams<double>& params, Build build, double h = 1e-5) {
  params.zero_grad();
  {
    nn::Tape<double> tape;
    auto loss = build(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    nn::Tape<double> tape;
    return build(tape).value()[0];
  };
  double worst = 0.0;
  for (auto& p : params) {
    const nn::Tensor<double> analytic = p.has_grad() ? p.grad : nn::Tensor<double>(p.value.shape());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = eval();
      p.value[i] = orig - h;
      const double down = eval();
      p.value[i] = orig;
      worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
    }
  }
  params.zero_grad();
  return worst;
}

/// Same for the gradient with respect to one input tensor.
template <typename Build>
double gradcheck_input(nn::Tensor<double> x, Build build, double h = 1e-5) {
  nn::Tensor<double> analytic;
  {
    nn::Tape<double> tape;
    auto v = tape.variable(x);
    auto loss = build(tape, v);
    tape.backward(loss);
    analytic = tape.has_grad(v.id()) ? tape.grad(v) : nn::Tensor<double>(x.shape());
  }
  auto eval = [&](const nn::Tensor<double>& at) {
    nn::Tape<double> tape;
    return build(tape, tape.variable(at)).value()[0];
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = eval(x);
    x[i] = orig - h;
    const double down = eval(x);
    x[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

inline nn::Tensor<double> random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = u(rng);
  return t;
}

/// Uniform values whose magnitude is at least `gap`, keeping kinks of
/// piecewise-linear ops out of finite-difference reach.
inline nn::Tensor<double> random_away_from_zero(nn::Shape shape, std::uint64_t seed, double gap = 0.05) {
  auto t = random_tensor(std::move(shape), seed);
  for (auto& v : t.values()) v = v < 0 ? v - gap : v + gap;
  return t;
}

/// Overwrites every parameter with uniform values in [-a, a]. Unnormalised
/// tiny nets at their 0.02 init have gradients near the roundoff floor.
inline void randomize_params(nn::ModelParams<double>& params, std::uint64_t seed, double a = 0.5) {
  for (auto& p : params) {
    const auto t = random_tensor(p.value.shape(), seed++, -a, a);
    for (std::size_t i = 0; i < t.size(); ++i) p.value[i] = t[i];
  }
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ldct_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double mean_of(const Image2D& img) {
  double s = 0.0;
  for (double v : img.values()) s += v;
  return s / static_cast<double>(img.size());
}

}  // namespace ldct::testing
