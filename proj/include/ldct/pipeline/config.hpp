#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ldct/ct/geometry.hpp"
#include "ldct/decompose.hpp"
#include "ldct/negan/factors.hpp"
#include "ldct/negan/train.hpp"
#include "ldct/phantom.hpp"

namespace ldct::pipeline {

/// Parameters of every CLI command, read from `key = value` text. Unknown
/// keys are rejected; `seed` has no default (a --seed flag may supply it).
/// See README for the key reference.
struct RunConfig {
  std::optional<std::uint64_t> seed;

  // simulate
  std::size_t train_phantoms = 64;
  std::size_t test_phantoms = 4;   // random phantoms in the test split
  std::size_t test_uniform = 4;    // uniform disks in the test split
  phantom::RandomPhantomConfig phantom;
  double uniform_radius = 0.8;
  double uniform_value = 0.2;
  std::size_t grid = 128;
  double pixel_cm = 0.2;
  std::size_t views = 180;
  std::size_t bins = 0;  // 0 = smallest count covering the diagonal
  ct::FilterKind filter = ct::FilterKind::ram_lak;
  negan::DoseParameter dose_parameter = negan::DoseParameter::tube_current;
  std::vector<double> doses_ma{90, 70, 50, 30};
  std::vector<double> noise_indices{10, 20, 30, 40};  // HU, with dose_parameter = noise_index
  double calibration_ma = 90.0;
  std::size_t calibration_scans = 4;
  double photons_per_ma = 1000.0;
  double electronic_sigma = 0.0;
  bool round_factors = true;
  negan::NormWindow window;
  decompose::Scheme scheme = decompose::Scheme::simulation;

  // train
  negan::TrainConfig train;
  negan::GeneratorConfig generator;
  negan::DiscriminatorConfig discriminator;
  decompose::DenoiserConfig denoiser;
  std::size_t denoiser_target_level = 0;  // 0 = lowest dose

  // evaluate
  std::vector<double> eval_k{0, 1, 1.3, 1.8, 2.4, 3.0, 4.0};
  std::size_t nps_realizations = 50;
  std::size_t nps_patch = 64;
  double roi_fraction = 0.4;
  double mu_water = 0.2;

  static RunConfig parse(const std::string& text, const std::string& source = "config");
  static RunConfig read(const std::filesystem::path& path);
  /// Every key with its current value; parse(serialize()) reproduces *this.
  std::string serialize() const;

  std::uint64_t required_seed() const;
  ct::ScanGeometry geometry() const;
  /// Throws config errors naming the offending key.
  void validate() const;
};

/// Independent stream seed for (purpose, a, b) under a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace ldct::pipeline
