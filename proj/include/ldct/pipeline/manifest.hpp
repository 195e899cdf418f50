#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ldct/ct/geometry.hpp"
#include "ldct/decompose.hpp"
#include "ldct/negan/factors.hpp"
#include "ldct/negan/model.hpp"
#include "ldct/phantom.hpp"

namespace ldct::pipeline {

/// One anatomy scanned at every dose. Paths are relative to the manifest.
struct SampleRecord {
  std::string id;
  std::string split = "train";    // train | test
  std::string kind = "random";    // random | uniform
  std::uint64_t phantom_seed = 0;
  std::vector<phantom::EllipseSpec> ellipses;
  std::string clean;                   // noiseless reconstruction
  std::vector<std::string> doses;      // one reconstruction per dose, HDCT first
  std::vector<std::uint64_t> dose_seeds;
  std::string n0;                      // empty unless written (simulation scheme)

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Dataset description in `key = value` text.
struct Manifest {
  static constexpr int kVersion = 1;

  int version = kVersion;
  ct::ScanGeometry geometry;
  negan::NormWindow window;
  negan::DoseParameter dose_parameter = negan::DoseParameter::tube_current;
  std::vector<double> levels;         // mA or noise index per dose, HDCT first
  std::vector<double> tube_currents;  // mA actually scanned per dose
  double photons_per_ma = 1000.0;
  double electronic_sigma = 0.0;
  bool round_factors = true;
  std::vector<double> noise_factors;  // per lower-dose level
  decompose::Scheme scheme = decompose::Scheme::simulation;
  std::vector<SampleRecord> samples;

  std::size_t lower_levels() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }

  std::string serialize() const;
  static Manifest parse(const std::string& text, const std::string& source = "manifest");
  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

  /// Structural checks: factor grid agrees with set_noise_factors, per-sample
  /// dose lists match the level count. With `base_dir`, every referenced
  /// file must also exist.
  void validate(const std::filesystem::path* base_dir = nullptr) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string format_ellipses(const std::vector<phantom::EllipseSpec>& ellipses);
std::vector<phantom::EllipseSpec> parse_ellipses(const std::string& text);

}  // namespace ldct::pipeline
