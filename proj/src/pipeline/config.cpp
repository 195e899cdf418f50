#include "ldct/pipeline/config.hpp"

#include <algorithm>
#include <cmath>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"

namespace ldct::pipeline {

namespace {

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::size_t size_key(const io::KeyValues& kv, const std::string& key, std::size_t fallback) {
  return kv.has(key) ? static_cast<std::size_t>(kv.unsigned_integer(key)) : fallback;
}

int int_key(const io::KeyValues& kv, const std::string& key, int fallback) {
  const auto v = kv.integer(key, fallback);
  require(v >= 0 && v <= 1000000, ErrorCategory::config, kv.source() + ": key '" + key + "' is out of range");
  return static_cast<int>(v);
}

constexpr std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix(seed);
  for (char c : purpose) h = mix(h ^ static_cast<unsigned char>(c));
  return mix(mix(h ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  const auto kv = io::KeyValues::parse(text, source);
  RunConfig c;
  if (kv.has("seed")) c.seed = kv.unsigned_integer("seed");

  c.train_phantoms = size_key(kv, "train_phantoms", c.train_phantoms);
  c.test_phantoms = size_key(kv, "test_phantoms", c.test_phantoms);
  c.test_uniform = size_key(kv, "test_uniform", c.test_uniform);
  c.phantom.min_count = int_key(kv, "phantom_min_count", c.phantom.min_count);
  c.phantom.max_count = int_key(kv, "phantom_max_count", c.phantom.max_count);
  c.uniform_radius = kv.number("uniform_radius", c.uniform_radius);
  c.uniform_value = kv.number("uniform_value", c.uniform_value);
  c.grid = size_key(kv, "grid", c.grid);
  c.pixel_cm = kv.number("pixel_cm", c.pixel_cm);
  c.views = size_key(kv, "views", c.views);
  c.bins = size_key(kv, "bins", c.bins);
  if (kv.has("filter")) c.filter = ct::filter_from_string(kv.text("filter"));
  if (kv.has("dose_parameter")) {
    const auto p = kv.text("dose_parameter");
    require(p == "tube_current" || p == "noise_index", ErrorCategory::config,
            source + ": key 'dose_parameter' expects tube_current or noise_index");
    c.dose_parameter = p == "tube_current" ? negan::DoseParameter::tube_current : negan::DoseParameter::noise_index;
  }
  c.doses_ma = kv.numbers("doses_ma", c.doses_ma);
  c.noise_indices = kv.numbers("noise_indices", c.noise_indices);
  c.calibration_ma = kv.number("calibration_ma", c.calibration_ma);
  c.calibration_scans = size_key(kv, "calibration_scans", c.calibration_scans);
  c.photons_per_ma = kv.number("photons_per_ma", c.photons_per_ma);
  c.electronic_sigma = kv.number("electronic_sigma", c.electronic_sigma);
  c.round_factors = kv.boolean("round_factors", c.round_factors);
  c.window.low = kv.number("window_low", c.window.low);
  c.window.high = kv.number("window_high", c.window.high);
  if (kv.has("scheme")) c.scheme = decompose::scheme_from_string(kv.text("scheme"));

  auto& t = c.train;
  t.epochs = int_key(kv, "epochs", t.epochs);
  t.batch = size_key(kv, "batch", t.batch);
  t.patch = size_key(kv, "patch", t.patch);
  t.weights.fidelity = kv.number("lambda_fid", t.weights.fidelity);
  t.weights.reconstruction = kv.number("lambda_rec", t.weights.reconstruction);
  if (kv.has("adversarial")) {
    const auto a = kv.text("adversarial");
    require(a == "non_saturating" || a == "minimax", ErrorCategory::config,
            source + ": key 'adversarial' expects non_saturating or minimax");
    t.weights.form = a == "minimax" ? negan::AdversarialForm::minimax : negan::AdversarialForm::non_saturating;
  }
  t.schedule.base_lr = kv.number("lr", t.schedule.base_lr);
  t.schedule.flat_epochs = int_key(kv, "flat_epochs", t.schedule.flat_epochs);
  t.schedule.decay_epochs = int_key(kv, "decay_epochs", t.schedule.decay_epochs);
  t.beta1 = kv.number("beta1", t.beta1);
  t.beta2 = kv.number("beta2", t.beta2);
  c.generator.base_width = size_key(kv, "g_base_width", c.generator.base_width);
  c.generator.residual_blocks = size_key(kv, "g_residual_blocks", c.generator.residual_blocks);
  c.generator.input_skip = kv.boolean("g_input_skip", c.generator.input_skip);
  if (kv.has("g_output_skip")) c.generator.output_skip = negan::output_skip_from_string(kv.text("g_output_skip"));
  c.discriminator.base_width = size_key(kv, "d_base_width", c.discriminator.base_width);
  c.discriminator.depth = size_key(kv, "d_depth", c.discriminator.depth);
  if (kv.has("d_input")) c.discriminator.input = negan::critic_input_from_string(kv.text("d_input"));
  c.discriminator.residual_gain = kv.number("d_residual_gain", c.discriminator.residual_gain);
  c.discriminator.instance_norm = kv.boolean("d_instance_norm", c.discriminator.instance_norm);
  auto& d = c.denoiser;
  d.epochs = int_key(kv, "denoiser_epochs", d.epochs);
  d.batch = size_key(kv, "denoiser_batch", d.batch);
  d.patch = size_key(kv, "denoiser_patch", d.patch);
  d.schedule.base_lr = kv.number("denoiser_lr", d.schedule.base_lr);
  d.schedule.flat_epochs = int_key(kv, "denoiser_flat_epochs", d.schedule.flat_epochs);
  d.schedule.decay_epochs = int_key(kv, "denoiser_decay_epochs", d.schedule.decay_epochs);
  c.denoiser_target_level = size_key(kv, "denoiser_target_level", c.denoiser_target_level);

  c.eval_k = kv.numbers("eval_k", c.eval_k);
  c.nps_realizations = size_key(kv, "nps_realizations", c.nps_realizations);
  c.nps_patch = size_key(kv, "nps_patch", c.nps_patch);
  c.roi_fraction = kv.number("roi_fraction", c.roi_fraction);
  c.mu_water = kv.number("mu_water", c.mu_water);
  kv.reject_unconsumed();

  // settings shared with the networks follow the top-level keys
  c.denoiser.window = c.window;
  c.denoiser.network = c.generator;
  c.denoiser.network.in_channels = 1;
  c.validate();
  return c;
}

RunConfig RunConfig::read(const std::filesystem::path& path) {
  const auto kv = io::KeyValues::read(path);
  return parse(kv.serialize(), path.string());
}

std::string RunConfig::serialize() const {
  io::KeyValues kv;
  if (seed) kv.set("seed", std::to_string(*seed));
  kv.set("train_phantoms", std::to_string(train_phantoms));
  kv.set("test_phantoms", std::to_string(test_phantoms));
  kv.set("test_uniform", std::to_string(test_uniform));
  kv.set("phantom_min_count", std::to_string(phantom.min_count));
  kv.set("phantom_max_count", std::to_string(phantom.max_count));
  kv.set("uniform_radius", uniform_radius);
  kv.set("uniform_value", uniform_value);
  kv.set("grid", std::to_string(grid));
  kv.set("pixel_cm", pixel_cm);
  kv.set("views", std::to_string(views));
  kv.set("bins", std::to_string(bins));
  kv.set("filter", ct::to_string(filter));
  kv.set("dose_parameter",
         std::string(dose_parameter == negan::DoseParameter::tube_current ? "tube_current" : "noise_index"));
  kv.set("doses_ma", doses_ma);
  kv.set("noise_indices", noise_indices);
  kv.set("calibration_ma", calibration_ma);
  kv.set("calibration_scans", std::to_string(calibration_scans));
  kv.set("photons_per_ma", photons_per_ma);
  kv.set("electronic_sigma", electronic_sigma);
  kv.set("round_factors", bool_text(round_factors));
  kv.set("window_low", window.low);
  kv.set("window_high", window.high);
  kv.set("scheme", decompose::to_string(scheme));
  kv.set("epochs", std::to_string(train.epochs));
  kv.set("batch", std::to_string(train.batch));
  kv.set("patch", std::to_string(train.patch));
  kv.set("lambda_fid", train.weights.fidelity);
  kv.set("lambda_rec", train.weights.reconstruction);
  kv.set("adversarial",
         std::string(train.weights.form == negan::AdversarialForm::minimax ? "minimax" : "non_saturating"));
  kv.set("lr", train.schedule.base_lr);
  kv.set("flat_epochs", std::to_string(train.schedule.flat_epochs));
  kv.set("decay_epochs", std::to_string(train.schedule.decay_epochs));
  kv.set("beta1", train.beta1);
  kv.set("beta2", train.beta2);
  kv.set("g_base_width", std::to_string(generator.base_width));
  kv.set("g_residual_blocks", std::to_string(generator.residual_blocks));
  kv.set("g_input_skip", bool_text(generator.input_skip));
  kv.set("g_output_skip", std::string(negan::to_string(generator.output_skip)));
  kv.set("d_base_width", std::to_string(discriminator.base_width));
  kv.set("d_depth", std::to_string(discriminator.depth));
  kv.set("d_input", std::string(negan::to_string(discriminator.input)));
  kv.set("d_residual_gain", discriminator.residual_gain);
  kv.set("d_instance_norm", bool_text(discriminator.instance_norm));
  kv.set("denoiser_epochs", std::to_string(denoiser.epochs));
  kv.set("denoiser_batch", std::to_string(denoiser.batch));
  kv.set("denoiser_patch", std::to_string(denoiser.patch));
  kv.set("denoiser_lr", denoiser.schedule.base_lr);
  kv.set("denoiser_flat_epochs", std::to_string(denoiser.schedule.flat_epochs));
  kv.set("denoiser_decay_epochs", std::to_string(denoiser.schedule.decay_epochs));
  kv.set("denoiser_target_level", std::to_string(denoiser_target_level));
  kv.set("eval_k", eval_k);
  kv.set("nps_realizations", std::to_string(nps_realizations));
  kv.set("nps_patch", std::to_string(nps_patch));
  kv.set("roi_fraction", roi_fraction);
  kv.set("mu_water", mu_water);
  return kv.serialize();
}

std::uint64_t RunConfig::required_seed() const {
  require(seed.has_value(), ErrorCategory::config, "seed: required (set 'seed' in the config or pass --seed)");
  return *seed;
}

ct::ScanGeometry RunConfig::geometry() const {
  auto g = ct::ScanGeometry::for_grid(grid, pixel_cm, views, filter);
  if (bins != 0) g.n_bins = bins;
  return g;
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& key, const std::string& what) {
    require(ok, ErrorCategory::config, "key '" + key + "': " + what);
  };
  check(train_phantoms >= 1, "train_phantoms", "need at least one training phantom");
  check(phantom.min_count >= 0 && phantom.min_count <= phantom.max_count, "phantom_min_count",
        "must not exceed phantom_max_count");
  check(uniform_radius > 0.0 && uniform_radius <= 1.0, "uniform_radius", "must be in (0, 1]");
  check(uniform_value > 0.0, "uniform_value", "must be positive");
  check(grid >= 16 && grid % 4 == 0, "grid", "must be a multiple of 4 and >= 16");
  check(std::isfinite(pixel_cm) && pixel_cm > 0.0, "pixel_cm", "must be positive");
  check(views >= 1, "views", "need at least one view");
  geometry().validate();
  const auto& levels = dose_parameter == negan::DoseParameter::tube_current ? doses_ma : noise_indices;
  const std::string level_key = dose_parameter == negan::DoseParameter::tube_current ? "doses_ma" : "noise_indices";
  check(!levels.empty(), level_key, "need at least the HDCT level");
  for (double v : levels) check(std::isfinite(v) && v > 0.0, level_key, "levels must be positive");
  if (dose_parameter == negan::DoseParameter::tube_current)
    check(std::is_sorted(levels.begin(), levels.end(), std::greater<>()), level_key,
          "must be sorted by descending tube current");
  else
    check(std::is_sorted(levels.begin(), levels.end()), level_key, "must be sorted by ascending noise index");
  check(calibration_ma > 0.0, "calibration_ma", "must be positive");
  check(calibration_scans >= 1, "calibration_scans", "need at least one scan");
  check(photons_per_ma > 0.0, "photons_per_ma", "must be positive");
  check(electronic_sigma >= 0.0, "electronic_sigma", "must be >= 0");
  check(window.high > window.low, "window_high", "must exceed window_low");
  train.validate();
  check(train.patch <= grid, "patch", "must not exceed grid");
  check(generator.base_width >= 1, "g_base_width", "must be >= 1");
  check(discriminator.depth >= 1 && (std::size_t{1} << (discriminator.depth + 1)) <= train.patch, "d_depth",
        "patch too small for this discriminator depth");
  check(discriminator.base_width >= 1, "d_base_width", "must be >= 1");
  check(std::isfinite(discriminator.residual_gain) && discriminator.residual_gain > 0.0, "d_residual_gain",
        "must be positive");
  check(denoiser.patch <= grid, "denoiser_patch", "must not exceed grid");
  denoiser.validate();
  check(denoiser_target_level < levels.size(), "denoiser_target_level", "no such dose level");
  for (double k : eval_k) check(std::isfinite(k) && k >= 0.0, "eval_k", "noise factors must be >= 0");
  check(nps_realizations >= 2, "nps_realizations", "need at least 2");
  check(nps_patch >= 2 && nps_patch <= grid, "nps_patch", "must fit the grid");
  check(roi_fraction > 0.0 && roi_fraction <= 1.0, "roi_fraction", "must be in (0, 1]");
  check(mu_water > 0.0, "mu_water", "must be positive");
}

}  // namespace ldct::pipeline
