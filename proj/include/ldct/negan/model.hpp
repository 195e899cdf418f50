#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ldct/image.hpp"
#include "ldct/io/container.hpp"
#include "ldct/negan/networks.hpp"

namespace ldct::negan {

/// Affine map of attenuation [low, high] onto [-1, 1]. Noise images are
/// differences, so they take only the scale.
struct NormWindow {
  double low = -0.2;
  double high = 0.6;

  double scale() const noexcept { return 2.0 / (high - low); }
  double to_unit(double v) const noexcept { return (v - low) * scale() - 1.0; }
  double from_unit(double u) const noexcept { return (u + 1.0) / scale() + low; }
  void validate() const;

  friend bool operator==(const NormWindow&, const NormWindow&) = default;
};

/// [N, 1, H, W] tensor of normalised images; `noise` selects scale-only.
template <typename T>
nn::Tensor<T> to_tensor(std::span<const Image2D> images, const NormWindow& window, bool noise);
/// Sample n of a [N, 1, H, W] tensor mapped back to attenuation.
template <typename T>
Image2D from_tensor(const nn::Tensor<T>& t, std::size_t n, const NormWindow& window, double spacing);

struct NeganConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  std::vector<double> noise_factors;  // one per lower-dose level, S = size()
  NormWindow window;

  std::size_t levels() const noexcept { return noise_factors.size(); }
  void validate() const;
  friend bool operator==(const NeganConfig&, const NeganConfig&) = default;
};

/// Generator plus one discriminator per lower-dose level.
class NeganModel {
 public:
  NeganModel(NeganConfig cfg, std::uint64_t seed);

  const NeganConfig& config() const noexcept { return cfg_; }
  std::size_t levels() const noexcept { return cfg_.levels(); }
  Generator<float>& generator() noexcept { return generator_; }
  const Generator<float>& generator() const noexcept { return generator_; }
  /// Discriminator for level j in 1..S.
  Discriminator<float>& discriminator(std::size_t level);
  const Discriminator<float>& discriminator(std::size_t level) const;

  /// x̂ = G(x0, k n0) with inputs normalised by the model window and the
  /// output mapped back to attenuation (rounded to f32).
  Image2D generate(const Image2D& x0, const Image2D& n0, double k);
  /// Batched variant; every pair must share one grid.
  std::vector<Image2D> generate(std::span<const Image2D> x0, std::span<const Image2D> n0, double k);

  /// Header entry "negan.header" plus networks under "g." and "d<j>.".
  void store(io::Container& out) const;
  static NeganModel load(const io::Container& in);

  friend bool operator==(const NeganModel& a, const NeganModel& b);

 private:
  NeganConfig cfg_;
  Generator<float> generator_;
  std::vector<Discriminator<float>> discriminators_;
};

std::string header_text(const NeganConfig& cfg);
NeganConfig parse_header(const std::string& text);

}  // namespace ldct::negan
