#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ldct/metrics.hpp"
#include "ldct/negan/train.hpp"
#include "ldct/pipeline/config.hpp"
#include "ldct/pipeline/dataset.hpp"

namespace ldct::pipeline {

/// Tube currents scanned for the configured levels. With noise-index levels
/// the uniform disk is scanned at calibration_ma first and the currents are
/// scaled by the variance law.
std::vector<double> resolve_tube_currents(const RunConfig& cfg, std::ostream& log);

/// Phantoms of both splits, in manifest order.
std::vector<PhantomEntry> make_phantoms(const RunConfig& cfg);

/// phantom -> radon -> noise -> fbp for every dose; writes the dataset and
/// `out_dir/manifest.txt`.
Manifest cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct TrainOutcome {
  std::vector<negan::EpochLog> history;  // every epoch, including resumed ones
  std::filesystem::path checkpoint;
  std::filesystem::path log_file;
};

/// Trains the denoiser (denoiser scheme, fresh runs only) and the NE-GAN.
/// Writes `out_dir/checkpoint.ldct` after every epoch and
/// `out_dir/train_log.csv`. `resume` continues from an earlier checkpoint.
TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                       const std::filesystem::path& out_dir, const std::optional<std::filesystem::path>& resume,
                       std::ostream& log);

struct GenerateOutcome {
  std::size_t images = 0;
  double seconds = 0.0;
  double images_per_second = 0.0;
};

/// One image per (test sample, k) under `out_dir/<sample id>/k<k>.ldct`.
GenerateOutcome cmd_generate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest_path,
                             std::span<const double> k_list, const std::filesystem::path& out_dir,
                             std::ostream& log);

struct LevelRow {
  std::size_t level = 0;
  double k = 0.0;
  double tube_current_ma = 0.0;
  double reference_ni = 0.0;  // HU
  double negan_ni = 0.0;
  double baseline_ni = 0.0;
  double negan_nps_similarity = 0.0;
  double baseline_nps_similarity = 0.0;
};

struct SweepRow {
  double k = 0.0;
  double negan_ni = 0.0;
  double baseline_ni = 0.0;
};

struct EvaluationReport {
  bool reference_only = false;
  double hdct_ni = 0.0;
  double zero_factor_mae = 0.0;  // normalised units
  double parseval_ratio = 0.0;   // white-noise self-check, ideal 1
  std::vector<LevelRow> levels;
  std::vector<SweepRow> sweep;
  std::vector<metrics::NPSResult> reference_nps;  // per lower-dose level
  std::vector<metrics::NPSResult> negan_nps;
  std::vector<metrics::NPSResult> baseline_nps;

  std::string text() const;
};

/// Noise indices (NE-GAN, reference simulator, scaled-addition baseline) on
/// the uniform test phantoms, NPS of repeated scans, and their similarity.
/// An empty `eval_k` yields reference data only and needs no checkpoint.
/// Writes `out_dir/report.csv`, per-level NPS profiles and `nps.ldct`.
EvaluationReport cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                              const std::optional<std::filesystem::path>& checkpoint,
                              const std::filesystem::path& out_dir, std::ostream& log);

/// HU-scaled noise index of `image - base` on the centred ROI.
double noise_index_hu(const Image2D& image, const Image2D& base, const RunConfig& cfg);

}  // namespace ldct::pipeline
