#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ldct/negan/losses.hpp"
#include "ldct/negan/model.hpp"
#include "ldct/nn/adam.hpp"

namespace ldct::negan {

/// One (x0, n0, k_j, x_j) record; `level` is 1-based.
struct TrainingSample {
  Image2D x0;
  Image2D n0;
  std::size_t level = 1;
  double k = 1.0;
  Image2D target;
};

struct TrainConfig {
  int epochs = 40;
  std::size_t batch = 4;
  std::size_t patch = 64;
  LossWeights weights;
  nn::LrSchedule schedule{2e-4, 20, 20};
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;

  /// Batch 8 of 128 x 128 patches, 200 flat + 200 decaying epochs.
  static TrainConfig paper_scale(std::uint64_t seed);
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double discriminator = 0.0;
  double adversarial = 0.0;
  double fidelity = 0.0;
  double reconstruction = 0.0;
  std::size_t steps = 0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

/// Rejects samples whose level has no discriminator, whose factor differs
/// from the model's grid, or whose images are not co-registered.
void validate_samples(const NeganModel& model, std::span<const TrainingSample> samples, std::size_t patch);

/// Alternating optimisation: per batch, for each level in order, one Adam
/// step on the generator, then one on that level's discriminator. Random
/// state is derived from (seed, epoch), so resuming from a checkpoint
/// continues exactly as an uninterrupted run would.
class NeganTrainer {
 public:
  NeganTrainer(NeganModel model, TrainConfig cfg);

  /// Trains until cfg.epochs; returns logs of the epochs run by this call.
  std::vector<EpochLog> train(std::span<const TrainingSample> samples);
  EpochLog run_epoch(std::span<const TrainingSample> samples);

  int epoch() const noexcept { return epoch_; }
  const std::vector<EpochLog>& history() const noexcept { return history_; }
  NeganModel& model() noexcept { return model_; }
  const TrainConfig& config() const noexcept { return cfg_; }

  /// Model, optimiser moments, epoch counter and log history.
  void store(io::Container& out) const;
  static NeganTrainer load(const io::Container& in, TrainConfig cfg);

 private:
  NeganModel model_;
  TrainConfig cfg_;
  nn::AdamState<float> gen_state_;
  std::vector<nn::AdamState<float>> disc_states_;
  int epoch_ = 0;
  std::vector<EpochLog> history_;
};

/// Delimited text: epoch,lr,d_loss,g_adversarial,g_fidelity,g_reconstruction,steps
std::string format_log(std::span<const EpochLog> logs);
std::vector<EpochLog> parse_log(const std::string& text);

/// Random crops shared by the images of one sample; a deterministic helper
/// also used by the denoiser.
struct CropPlan {
  std::size_t row = 0;
  std::size_t col = 0;
};
CropPlan random_crop(std::size_t rows, std::size_t cols, std::size_t patch, std::mt19937_64& rng);

/// Engine keyed by (seed, epoch).
std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch);

}  // namespace ldct::negan
