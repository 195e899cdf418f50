#include "ldct/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ldct/error.hpp"

namespace ldct::phantom {

bool EllipseSpec::contains(double x, double y) const {
  const double dx = x - cx, dy = y - cy;
  const double c = std::cos(angle), s = std::sin(angle);
  const double u = (dx * c + dy * s) / a;
  const double v = (-dx * s + dy * c) / b;
  return u * u + v * v <= 1.0;
}

double pixel_x(std::size_t col, std::size_t n) {
  return (2.0 * static_cast<double>(col) + 1.0 - static_cast<double>(n)) / static_cast<double>(n);
}

double pixel_y(std::size_t row, std::size_t n) {
  return (static_cast<double>(n) - 1.0 - 2.0 * static_cast<double>(row)) / static_cast<double>(n);
}

Image2D render(std::span<const EllipseSpec> spec, std::size_t n, double spacing_cm) {
  require(n >= 16, ErrorCategory::invalid_argument, "phantom grid must be at least 16 pixels");
  for (const auto& e : spec)
    require(e.a > 0.0 && e.b > 0.0, ErrorCategory::invalid_argument, "ellipse semi-axes must be positive");
  Image2D img(n, n, spacing_cm);
  for (std::size_t r = 0; r < n; ++r) {
    const double y = pixel_y(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double x = pixel_x(c, n);
      if (x * x + y * y > 1.0) continue;
      double v = 0.0;
      for (const auto& e : spec)
        if (e.contains(x, y)) v += e.value;
      img(r, c) = v;
    }
  }
  return img;
}

std::vector<EllipseSpec> shepp_logan(bool modified, double scale) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double original[10] = {2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
  const double high_contrast[10] = {1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  const double* v = modified ? high_contrast : original;
  std::vector<EllipseSpec> e = {
      {0.0, 0.0, 0.69, 0.92, 0.0, v[0]},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, v[1]},
      {0.22, 0.0, 0.11, 0.31, -18.0 * deg, v[2]},
      {-0.22, 0.0, 0.16, 0.41, 18.0 * deg, v[3]},
      {0.0, 0.35, 0.21, 0.25, 0.0, v[4]},
      {0.0, 0.1, 0.046, 0.046, 0.0, v[5]},
      {0.0, -0.1, 0.046, 0.046, 0.0, v[6]},
      {-0.08, -0.605, 0.046, 0.023, 0.0, v[7]},
      {0.0, -0.606, 0.023, 0.023, 0.0, v[8]},
      {0.06, -0.605, 0.023, 0.046, 0.0, v[9]},
  };
  for (auto& x : e) x.value *= scale;
  return e;
}

std::vector<EllipseSpec> uniform_disk(double radius, double value) {
  return {{0.0, 0.0, radius, radius, 0.0, value}};
}

namespace {

bool inside(const EllipseSpec& outer, const EllipseSpec& inner) {
  constexpr int kSamples = 64;
  const double c = std::cos(inner.angle), s = std::sin(inner.angle);
  for (int i = 0; i < kSamples; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kSamples;
    const double u = inner.a * std::cos(t), v = inner.b * std::sin(t);
    if (!outer.contains(inner.cx + u * c - v * s, inner.cy + u * s + v * c)) return false;
  }
  return outer.contains(inner.cx, inner.cy);
}

}  // namespace

Phantom random_phantom(std::uint64_t seed, const RandomPhantomConfig& cfg, std::size_t n,
                       double spacing_cm) {
  require(cfg.min_count >= 0 && cfg.min_count <= cfg.max_count, ErrorCategory::config,
          "phantom count range is empty");
  require(cfg.body_min_axis > 0.0 && cfg.body_min_axis <= cfg.body_max_axis && cfg.body_max_axis <= 1.0,
          ErrorCategory::config, "phantom body axis range is invalid");
  require(cfg.min_axis > 0.0 && cfg.min_axis <= cfg.max_axis, ErrorCategory::config,
          "phantom ellipse axis range is invalid");
  require(cfg.min_contrast <= cfg.max_contrast && cfg.body_min_value <= cfg.body_max_value &&
              cfg.body_min_value > 0.0,
          ErrorCategory::config, "phantom value range is invalid");

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  Phantom ph;
  ph.n = n;
  ph.spacing = spacing_cm;
  EllipseSpec body{uniform(-0.05, 0.05),
                   uniform(-0.05, 0.05),
                   uniform(cfg.body_min_axis, cfg.body_max_axis),
                   uniform(cfg.body_min_axis, cfg.body_max_axis),
                   uniform(-0.3, 0.3),
                   uniform(cfg.body_min_value, cfg.body_max_value)};
  // Keep the body inside the unit disk.
  const double reach = std::hypot(body.cx, body.cy) + std::max(body.a, body.b);
  if (reach > 0.95) {
    body.a *= 0.95 / reach;
    body.b *= 0.95 / reach;
  }
  ph.ellipses.push_back(body);

  const int count = static_cast<int>(std::uniform_int_distribution<int>(cfg.min_count, cfg.max_count)(rng));
  const double floor = count > 0 ? -body.value / count : 0.0;
  for (int i = 0; i < count; ++i) {
    EllipseSpec e;
    for (int attempt = 0;; ++attempt) {
      const double shrink = attempt < 50 ? 1.0 : 0.5;
      e.a = uniform(cfg.min_axis, cfg.max_axis) * shrink;
      e.b = uniform(cfg.min_axis, cfg.max_axis) * shrink;
      e.angle = uniform(0.0, std::numbers::pi);
      e.cx = body.cx + uniform(-body.a, body.a);
      e.cy = body.cy + uniform(-body.b, body.b);
      if (inside(body, e)) break;
      if (attempt > 200) {
        e.cx = body.cx;
        e.cy = body.cy;
        e.a = e.b = std::min(cfg.min_axis, 0.5 * std::min(body.a, body.b));
        break;
      }
    }
    e.value = std::max(uniform(cfg.min_contrast, cfg.max_contrast), floor);
    ph.ellipses.push_back(e);
  }
  ph.image = render(ph.ellipses, n, spacing_cm);
  return ph;
}

}  // namespace ldct::phantom
