#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ldct/decompose.hpp"
#include "ldct/noise.hpp"
#include "ldct/pipeline/manifest.hpp"

namespace ldct::pipeline {

struct PhantomEntry {
  std::string id;
  std::string split = "train";
  std::string kind = "random";
  std::uint64_t seed = 0;
  phantom::Phantom phantom;
};

/// Dataset-wide settings copied into the manifest.
struct MultidoseSpec {
  ct::ScanGeometry geometry;
  negan::NormWindow window;
  negan::DoseParameter dose_parameter = negan::DoseParameter::tube_current;
  std::vector<double> levels;       // HDCT first
  std::vector<noise::DoseSpec> doses;  // one per level; seeds come from `seeds`
  bool round_factors = true;
  decompose::Scheme scheme = decompose::Scheme::simulation;
};

/// Scans every phantom noiselessly and at every dose, writes one container
/// per image under `out_dir/samples/<id>/` plus `out_dir/manifest.txt`, and
/// returns the manifest. `seeds[i][j]` keys the noise of phantom i at dose j.
/// With the simulation scheme the high-dose noise image is stored too.
Manifest make_multidose_set(std::span<const PhantomEntry> phantoms, const MultidoseSpec& spec,
                            std::span<const std::vector<std::uint64_t>> seeds,
                            const std::filesystem::path& out_dir);

struct LoadedSample {
  SampleRecord record;
  Image2D clean;
  std::vector<Image2D> doses;  // HDCT first
};

/// Samples of one split with their images.
std::vector<LoadedSample> load_split(const Manifest& manifest, const std::filesystem::path& base_dir,
                                     const std::string& split);

/// Simulation-scheme pair of a loaded sample: x0 = clean, n0 = HDCT - clean.
decompose::DecompositionPair simulation_pair(const LoadedSample& sample);

}  // namespace ldct::pipeline
