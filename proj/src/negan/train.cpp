#include "ldct/negan/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"
#include "ldct/nn/checkpoint.hpp"

namespace ldct::negan {

TrainConfig TrainConfig::paper_scale(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch = 8;
  cfg.patch = 128;
  cfg.schedule = {2e-4, 200, 200};
  cfg.seed = seed;
  return cfg;
}

void TrainConfig::validate() const {
  require(epochs >= 0, ErrorCategory::config, "train: epochs must be >= 0");
  require(batch >= 1, ErrorCategory::config, "train: batch must be >= 1");
  require(patch >= 16 && patch % 4 == 0, ErrorCategory::config, "train: patch must be a multiple of 4 and >= 16");
  require(weights.fidelity >= 0.0 && weights.reconstruction >= 0.0, ErrorCategory::config,
          "train: loss weights must be >= 0");
  require(schedule.base_lr >= 0.0 && schedule.flat_epochs >= 0 && schedule.decay_epochs >= 0, ErrorCategory::config,
          "train: invalid learning-rate schedule");
}

std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x6e6567u};
  return std::mt19937_64(seq);
}

CropPlan random_crop(std::size_t rows, std::size_t cols, std::size_t patch, std::mt19937_64& rng) {
  require(rows >= patch && cols >= patch, ErrorCategory::shape_mismatch,
          "crop of " + std::to_string(patch) + " px exceeds a " + std::to_string(rows) + "x" + std::to_string(cols) +
              " image");
  std::uniform_int_distribution<std::size_t> r(0, rows - patch), c(0, cols - patch);
  CropPlan plan;
  plan.row = r(rng);
  plan.col = c(rng);
  return plan;
}

void validate_samples(const NeganModel& model, std::span<const TrainingSample> samples, std::size_t patch) {
  require(!samples.empty(), ErrorCategory::invalid_argument, "train: no training samples");
  const auto& k = model.config().noise_factors;
  std::vector<std::size_t> per_level(k.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string where = "train: sample " + std::to_string(i);
    require(s.level >= 1 && s.level <= k.size(), ErrorCategory::invalid_argument,
            where + " has level " + std::to_string(s.level) + " but the model has " + std::to_string(k.size()) +
                " discriminators");
    require(s.k == k[s.level - 1], ErrorCategory::invalid_argument,
            where + " has noise factor " + io::format_number(s.k) + ", the model expects " +
                io::format_number(k[s.level - 1]) + " for level " + std::to_string(s.level));
    require(s.x0.same_grid(s.n0) && s.x0.same_grid(s.target), ErrorCategory::shape_mismatch,
            where + ": x0, n0 and target are not co-registered");
    require(s.x0.rows() >= patch && s.x0.cols() >= patch, ErrorCategory::shape_mismatch,
            where + ": image " + s.x0.shape_string() + " is smaller than the " + std::to_string(patch) + " px patch");
    ++per_level[s.level - 1];
  }
  for (std::size_t j = 0; j < per_level.size(); ++j)
    require(per_level[j] > 0, ErrorCategory::invalid_argument,
            "train: level " + std::to_string(j + 1) + " has no samples");
}

NeganTrainer::NeganTrainer(NeganModel model, TrainConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {
  cfg_.validate();
  gen_state_ = nn::AdamState<float>::for_params(model_.generator().params(), cfg_.schedule.base_lr, cfg_.beta1,
                                                cfg_.beta2);
  for (std::size_t j = 1; j <= model_.levels(); ++j)
    disc_states_.push_back(nn::AdamState<float>::for_params(model_.discriminator(j).params(), cfg_.schedule.base_lr,
                                                            cfg_.beta1, cfg_.beta2));
}

EpochLog NeganTrainer::run_epoch(std::span<const TrainingSample> samples) {
  validate_samples(model_, samples, cfg_.patch);
  const NormWindow& window = model_.config().window;
  const std::size_t levels = model_.levels();
  auto rng = epoch_rng(cfg_.seed, epoch_);

  std::vector<std::vector<std::size_t>> order(levels);
  for (std::size_t i = 0; i < samples.size(); ++i) order[samples[i].level - 1].push_back(i);
  std::size_t batches = 0;
  for (auto& idx : order) {
    std::shuffle(idx.begin(), idx.end(), rng);
    batches = std::max(batches, (idx.size() + cfg_.batch - 1) / cfg_.batch);
  }

  EpochLog log;
  log.epoch = epoch_;
  log.lr = nn::lr_schedule(epoch_, cfg_.schedule);
  gen_state_.lr = log.lr;
  for (auto& s : disc_states_) s.lr = log.lr;

  std::vector<Image2D> x0, n0, target;
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t j = 1; j <= levels; ++j) {
      const auto& idx = order[j - 1];
      const std::size_t begin = b * cfg_.batch;
      if (begin >= idx.size()) continue;
      const std::size_t end = std::min(idx.size(), begin + cfg_.batch);
      x0.clear();
      n0.clear();
      target.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = samples[idx[i]];
        const auto crop = random_crop(s.x0.rows(), s.x0.cols(), cfg_.patch, rng);
        x0.push_back(s.x0.crop(crop.row, crop.col, cfg_.patch, cfg_.patch));
        n0.push_back(s.n0.crop(crop.row, crop.col, cfg_.patch, cfg_.patch));
        target.push_back(s.target.crop(crop.row, crop.col, cfg_.patch, cfg_.patch));
      }
      const auto x0_t = to_tensor<float>(x0, window, false);
      const auto n0_t = to_tensor<float>(n0, window, true);
      const double k = model_.config().noise_factors[j - 1];
      auto& disc = model_.discriminator(j);

      // The discriminator step reuses the fake of the generator step, taken
      // before the generator update.
      nn::Tensor<float> fake;
      {
        nn::Tape<float> tape;
        auto xv = tape.constant(x0_t), nv = tape.constant(n0_t);
        auto terms = generator_loss(tape, model_.generator(), disc, xv, nv, k, cfg_.weights);
        log.adversarial += terms.adversarial;
        log.fidelity += terms.fidelity;
        log.reconstruction += terms.reconstruction;
        fake = terms.fake.value();
        tape.backward(terms.total);
        nn::adam_step(model_.generator().params(), gen_state_);
      }
      {
        nn::Tape<float> tape;
        auto xv = tape.constant(x0_t);
        auto real = tape.constant(to_tensor<float>(target, window, false));
        auto loss = discriminator_loss(tape, disc, real, tape.constant(std::move(fake)), xv);
        log.discriminator += static_cast<double>(loss.value()[0]);
        tape.backward(loss);
        nn::adam_step(disc.params(), disc_states_[j - 1]);
      }
      ++log.steps;
    }
  }
  if (log.steps > 0) {
    const double n = static_cast<double>(log.steps);
    log.discriminator /= n;
    log.adversarial /= n;
    log.fidelity /= n;
    log.reconstruction /= n;
  }
  ++epoch_;
  history_.push_back(log);
  return log;
}

std::vector<EpochLog> NeganTrainer::train(std::span<const TrainingSample> samples) {
  validate_samples(model_, samples, cfg_.patch);
  std::vector<EpochLog> logs;
  while (epoch_ < cfg_.epochs) logs.push_back(run_epoch(samples));
  return logs;
}

void NeganTrainer::store(io::Container& out) const {
  model_.store(out);
  nn::store_adam(out, gen_state_, model_.generator().params(), "adam.g.");
  for (std::size_t j = 1; j <= model_.levels(); ++j)
    nn::store_adam(out, disc_states_[j - 1], model_.discriminator(j).params(), "adam.d" + std::to_string(j) + ".");
  const double epoch = static_cast<double>(epoch_);
  out.add_f64("train.epoch", {1}, std::span(&epoch, 1));
  out.add_text("train.log", format_log(history_));
}

NeganTrainer NeganTrainer::load(const io::Container& in, TrainConfig cfg) {
  NeganTrainer t(NeganModel::load(in), std::move(cfg));
  const auto epoch = in.at("train.epoch").as_f64();
  require(epoch.size() == 1 && epoch[0] >= 0.0, ErrorCategory::format, "checkpoint: bad train.epoch entry");
  t.epoch_ = static_cast<int>(epoch[0]);
  nn::load_adam(in, t.gen_state_, t.model_.generator().params(), "adam.g.");
  for (std::size_t j = 1; j <= t.model_.levels(); ++j)
    nn::load_adam(in, t.disc_states_[j - 1], t.model_.discriminator(j).params(), "adam.d" + std::to_string(j) + ".");
  t.history_ = parse_log(in.at("train.log").as_text());
  require(t.history_.size() == static_cast<std::size_t>(t.epoch_), ErrorCategory::format,
          "checkpoint: log length disagrees with the epoch counter");
  return t;
}

std::string format_log(std::span<const EpochLog> logs) {
  std::string out = "epoch,lr,d_loss,g_adversarial,g_fidelity,g_reconstruction,steps\n";
  for (const auto& l : logs) {
    out += std::to_string(l.epoch) + ',' + io::format_number(l.lr) + ',' + io::format_number(l.discriminator) + ',' +
           io::format_number(l.adversarial) + ',' + io::format_number(l.fidelity) + ',' +
           io::format_number(l.reconstruction) + ',' + std::to_string(l.steps) + '\n';
  }
  return out;
}

std::vector<EpochLog> parse_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EpochLog> logs;
  require(static_cast<bool>(std::getline(in, line)) && line.rfind("epoch,", 0) == 0, ErrorCategory::format,
          "training log: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    EpochLog l;
    char c1, c2, c3, c4, c5, c6;
    row >> l.epoch >> c1 >> l.lr >> c2 >> l.discriminator >> c3 >> l.adversarial >> c4 >> l.fidelity >> c5 >>
        l.reconstruction >> c6 >> l.steps;
    require(!row.fail(), ErrorCategory::format, "training log: malformed row '" + line + "'");
    logs.push_back(l);
  }
  return logs;
}

}  // namespace ldct::negan
