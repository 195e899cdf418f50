#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldct/ct/geometry.hpp"
#include "ldct/negan/model.hpp"
#include "ldct/nn/adam.hpp"
#include "ldct/noise.hpp"

namespace ldct::decompose {

enum class Scheme { simulation, denoiser };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

/// Clean image x0 and high-dose noise image n0 with x0 + n0 == HDCT exactly.
struct DecompositionPair {
  Image2D x0;
  Image2D n0;
  Scheme scheme = Scheme::simulation;
  std::string provenance;  // seed or denoiser checkpoint id

  Image2D hdct() const { return x0 + n0; }
};

/// n0 = hdct - x0, verified to reproduce hdct bit for bit.
DecompositionPair difference_pair(const Image2D& hdct, Image2D x0, Scheme scheme, std::string provenance);

/// Scans `object` twice: noiseless (x0) and at the high dose (HDCT).
DecompositionPair simulation_scheme(const Image2D& object, const ct::ScanGeometry& geom,
                                    const noise::DoseSpec& hd_dose);

struct DenoiserConfig {
  negan::GeneratorConfig network{1, 16, 2, true, negan::OutputSkip::clean};
  negan::NormWindow window;
  int epochs = 20;
  std::size_t batch = 4;
  std::size_t patch = 64;
  nn::LrSchedule schedule{2e-4, 10, 10};
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Single-input encoder-decoder regressing LDCT from HDCT.
class Denoiser {
 public:
  Denoiser(const negan::GeneratorConfig& net, const negan::NormWindow& window, std::uint64_t seed);

  Image2D apply(const Image2D& hdct);
  negan::Generator<float>& network() noexcept { return net_; }
  const negan::NormWindow& window() const noexcept { return window_; }
  /// Content hash of the parameters, recorded as pair provenance.
  std::string checkpoint_id() const;

  void store(io::Container& out) const;
  static Denoiser load(const io::Container& in);

 private:
  negan::Generator<float> net_;
  negan::NormWindow window_;
};

/// Mean-abs regression of each pair's LDCT image (second) from its HDCT
/// image (first) on random crops. `epoch_losses`, when given, receives the
/// mean loss of every epoch.
Denoiser train_denoiser(std::span<const std::pair<Image2D, Image2D>> pairs, const DenoiserConfig& cfg,
                        std::vector<double>* epoch_losses = nullptr);

/// x0 = denoiser(hdct), n0 = hdct - x0.
DecompositionPair denoiser_scheme(const Image2D& hdct, Denoiser& denoiser);

/// x0 + k n0.
Image2D scaled_addition_baseline(const DecompositionPair& pair, double k);

}  // namespace ldct::decompose
