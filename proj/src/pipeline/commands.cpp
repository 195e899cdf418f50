#include "ldct/pipeline/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"

namespace ldct::pipeline {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::vector<std::byte> bytes(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) bytes[i] = static_cast<std::byte>(text[i]);
  io::write_file_bytes(path, bytes);
}

// Writes to a sibling temporary first so an interrupted run never leaves a
// truncated checkpoint.
void write_container_atomic(const fs::path& path, const io::Container& c) {
  fs::path tmp = path;
  tmp += ".tmp";
  c.write(tmp);
  fs::rename(tmp, path);
}

void require_output_dir(const fs::path& out_dir) {
  require(!out_dir.empty(), ErrorCategory::config, "--out: output directory required");
  require(!fs::exists(out_dir) || fs::is_directory(out_dir), ErrorCategory::io,
          "output path exists and is not a directory: " + out_dir.string());
}

Manifest read_manifest(const fs::path& path) {
  Manifest m = Manifest::read(path);
  const fs::path base = path.parent_path();
  m.validate(&base);
  return m;
}

std::string k_label(double k) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << k;
  return s.str();
}

negan::NeganConfig model_config(const RunConfig& cfg, const Manifest& m) {
  negan::NeganConfig nc;
  nc.generator = cfg.generator;
  nc.generator.in_channels = 2;
  nc.discriminator = cfg.discriminator;
  nc.noise_factors = m.noise_factors;
  nc.window = m.window;
  return nc;
}

// Decomposes an HDCT scan with the manifest's scheme.
class Decomposer {
 public:
  Decomposer(decompose::Scheme scheme, std::optional<decompose::Denoiser> denoiser)
      : scheme_(scheme), denoiser_(std::move(denoiser)) {}

  decompose::DecompositionPair operator()(const Image2D& hdct, const Image2D& clean, std::uint64_t seed) {
    if (scheme_ == decompose::Scheme::simulation)
      return decompose::difference_pair(hdct, clean, scheme_, "seed " + std::to_string(seed));
    return decompose::denoiser_scheme(hdct, *denoiser_);
  }

 private:
  decompose::Scheme scheme_;
  std::optional<decompose::Denoiser> denoiser_;
};

std::optional<decompose::Denoiser> checkpoint_denoiser(const io::Container& c, decompose::Scheme scheme) {
  if (scheme != decompose::Scheme::denoiser) return std::nullopt;
  require(c.find("denoiser.header") != nullptr, ErrorCategory::format,
          "the manifest uses the denoiser scheme but the checkpoint holds no denoiser");
  return decompose::Denoiser::load(c);
}

}  // namespace

double noise_index_hu(const Image2D& image, const Image2D& base, const RunConfig& cfg) {
  return 1000.0 / cfg.mu_water * metrics::noise_index(image - base, cfg.roi_fraction);
}

std::vector<double> resolve_tube_currents(const RunConfig& cfg, std::ostream& log) {
  if (cfg.dose_parameter == negan::DoseParameter::tube_current) return cfg.doses_ma;
  const auto geom = cfg.geometry();
  const Image2D disk = phantom::render(phantom::uniform_disk(cfg.uniform_radius, cfg.uniform_value), cfg.grid,
                                       cfg.pixel_cm);
  const Image2D clean = noise::reconstruct_clean(disk, geom);
  double var = 0.0;
  for (std::size_t s = 0; s < cfg.calibration_scans; ++s) {
    noise::DoseSpec dose{cfg.calibration_ma, cfg.photons_per_ma, cfg.electronic_sigma,
                         derive_seed(cfg.required_seed(), "calibration", s)};
    const double ni = noise_index_hu(noise::simulate_ldct(disk, geom, dose), clean, cfg);
    var += ni * ni;
  }
  const double ni_ref = std::sqrt(var / static_cast<double>(cfg.calibration_scans));
  log << "calibration: noise index " << ni_ref << " HU at " << cfg.calibration_ma << " mA\n";
  std::vector<double> ma;
  for (double ni : cfg.noise_indices) ma.push_back(noise::tube_current_for_noise_index(cfg.calibration_ma, ni_ref, ni));
  return ma;
}

std::vector<PhantomEntry> make_phantoms(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.required_seed();
  std::vector<PhantomEntry> out;
  auto add_random = [&](const std::string& split, std::size_t i, std::string_view purpose) {
    PhantomEntry e;
    e.split = split;
    e.id = split + "_" + std::to_string(i);
    e.seed = derive_seed(seed, purpose, i);
    e.phantom = phantom::random_phantom(e.seed, cfg.phantom, cfg.grid, cfg.pixel_cm);
    out.push_back(std::move(e));
  };
  for (std::size_t i = 0; i < cfg.train_phantoms; ++i) add_random("train", i, "train-phantom");
  for (std::size_t i = 0; i < cfg.test_phantoms; ++i) add_random("test", i, "test-phantom");
  for (std::size_t i = 0; i < cfg.test_uniform; ++i) {
    PhantomEntry e;
    e.split = "test";
    e.kind = "uniform";
    e.id = "uniform_" + std::to_string(i);
    e.phantom.ellipses = phantom::uniform_disk(cfg.uniform_radius, cfg.uniform_value);
    e.phantom.n = cfg.grid;
    e.phantom.spacing = cfg.pixel_cm;
    e.phantom.image = phantom::render(e.phantom.ellipses, cfg.grid, cfg.pixel_cm);
    out.push_back(std::move(e));
  }
  return out;
}

Manifest cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const std::uint64_t seed = cfg.required_seed();
  require_output_dir(out_dir);
  MultidoseSpec spec;
  spec.geometry = cfg.geometry();
  spec.window = cfg.window;
  spec.dose_parameter = cfg.dose_parameter;
  spec.levels = cfg.dose_parameter == negan::DoseParameter::tube_current ? cfg.doses_ma : cfg.noise_indices;
  spec.round_factors = cfg.round_factors;
  spec.scheme = cfg.scheme;
  for (double ma : resolve_tube_currents(cfg, log))
    spec.doses.push_back({ma, cfg.photons_per_ma, cfg.electronic_sigma, 0});
  const auto phantoms = make_phantoms(cfg);
  std::vector<std::vector<std::uint64_t>> seeds(phantoms.size());
  for (std::size_t i = 0; i < phantoms.size(); ++i)
    for (std::size_t j = 0; j < spec.doses.size(); ++j) seeds[i].push_back(derive_seed(seed, "dose", i, j));
  Manifest m = make_multidose_set(phantoms, spec, seeds, out_dir);
  log << "simulate: " << m.samples.size() << " samples x " << m.levels.size() << " doses, noise factors";
  for (double k : m.noise_factors) log << ' ' << k;
  log << '\n';
  return m;
}

TrainOutcome cmd_train(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out_dir,
                       const std::optional<fs::path>& resume, std::ostream& log) {
  cfg.validate();
  const std::uint64_t seed = cfg.required_seed();
  require_output_dir(out_dir);
  const Manifest m = read_manifest(manifest_path);
  require(m.lower_levels() >= 1, ErrorCategory::state, "train: the manifest declares no lower-dose level");
  const auto train = load_split(m, manifest_path.parent_path(), "train");
  require(!train.empty(), ErrorCategory::state, "train: the manifest has no training samples");

  negan::TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(seed, "negan");
  const auto ncfg = model_config(cfg, m);
  std::optional<negan::NeganTrainer> trainer;
  std::optional<decompose::Denoiser> denoiser;
  if (resume) {
    const auto c = io::Container::read(*resume);
    trainer.emplace(negan::NeganTrainer::load(c, tcfg));
    require(trainer->model().config() == ncfg, ErrorCategory::state,
            "train: checkpoint " + resume->string() + " does not match the configured model or manifest levels");
    denoiser = checkpoint_denoiser(c, m.scheme);
    log << "train: resuming at epoch " << trainer->epoch() << '\n';
  } else {
    trainer.emplace(negan::NeganModel(ncfg, derive_seed(seed, "negan-init")), tcfg);
    if (m.scheme == decompose::Scheme::denoiser) {
      const std::size_t target = cfg.denoiser_target_level == 0 ? m.lower_levels() : cfg.denoiser_target_level;
      require(target <= m.lower_levels(), ErrorCategory::config, "denoiser_target_level: no such dose level");
      std::vector<std::pair<Image2D, Image2D>> pairs;
      for (const auto& s : train) pairs.emplace_back(s.doses.front(), s.doses[target]);
      auto dcfg = cfg.denoiser;
      dcfg.seed = derive_seed(seed, "denoiser");
      std::vector<double> losses;
      denoiser.emplace(decompose::train_denoiser(pairs, dcfg, &losses));
      log << "train: denoiser trained for " << losses.size() << " epochs";
      if (!losses.empty()) log << ", final loss " << losses.back();
      log << '\n';
    }
  }

  Decomposer decomposer(m.scheme, denoiser);
  std::vector<negan::TrainingSample> samples;
  for (const auto& s : train) {
    const auto pair = decomposer(s.doses.front(), s.clean, s.record.dose_seeds.front());
    for (std::size_t j = 1; j <= m.lower_levels(); ++j)
      samples.push_back({pair.x0, pair.n0, j, m.noise_factors[j - 1], s.doses[j]});
  }
  negan::validate_samples(trainer->model(), samples, tcfg.patch);

  TrainOutcome out;
  out.checkpoint = out_dir / "checkpoint.ldct";
  out.log_file = out_dir / "train_log.csv";
  auto save = [&] {
    io::Container c;
    trainer->store(c);
    if (denoiser) denoiser->store(c);
    write_container_atomic(out.checkpoint, c);
    write_text(out.log_file, negan::format_log(trainer->history()));
  };
  fs::create_directories(out_dir);
  while (trainer->epoch() < tcfg.epochs) {
    const auto e = trainer->run_epoch(samples);
    log << "epoch " << e.epoch << " lr " << e.lr << " d " << e.discriminator << " adv " << e.adversarial << " fid "
        << e.fidelity << " rec " << e.reconstruction << '\n';
    save();
  }
  save();
  out.history = trainer->history();
  return out;
}

GenerateOutcome cmd_generate(const fs::path& checkpoint, const fs::path& manifest_path, std::span<const double> k_list,
                             const fs::path& out_dir, std::ostream& log) {
  require(!k_list.empty(), ErrorCategory::config, "generate: at least one --k is required");
  for (double k : k_list)
    require(std::isfinite(k) && k >= 0.0, ErrorCategory::invalid_argument, "generate: noise factors must be >= 0");
  require_output_dir(out_dir);
  const auto c = io::Container::read(checkpoint);
  auto model = negan::NeganModel::load(c);
  const Manifest m = read_manifest(manifest_path);
  if (!(m.window == model.config().window))
    log << "warning: manifest normalization window differs from the checkpoint's; using the checkpoint's\n";
  const auto test = load_split(m, manifest_path.parent_path(), "test");
  require(!test.empty(), ErrorCategory::state, "generate: the manifest has no test split");
  Decomposer decomposer(m.scheme, checkpoint_denoiser(c, m.scheme));
  std::vector<Image2D> x0, n0;
  for (const auto& s : test) {
    auto pair = decomposer(s.doses.front(), s.clean, s.record.dose_seeds.front());
    x0.push_back(std::move(pair.x0));
    n0.push_back(std::move(pair.n0));
  }
  GenerateOutcome out;
  for (double k : k_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto images = model.generate(x0, n0, k);
    out.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t i = 0; i < images.size(); ++i)
      save_image(out_dir / test[i].record.id / ("k" + k_label(k) + ".ldct"), images[i]);
    out.images += images.size();
  }
  out.images_per_second = out.seconds > 0.0 ? static_cast<double>(out.images) / out.seconds : 0.0;
  log << "generate: " << out.images << " images in " << out.seconds << " s (" << out.images_per_second
      << " images/s)\n";
  return out;
}

std::string EvaluationReport::text() const {
  std::ostringstream s;
  s << std::setprecision(8);
  s << "metric,value\n";
  s << "hdct_noise_index_hu," << hdct_ni << '\n';
  s << "white_noise_parseval_ratio," << parseval_ratio << '\n';
  if (!reference_only) s << "zero_factor_mae_normalized," << zero_factor_mae << '\n';
  s << '\n';
  if (reference_only) {
    s << "level,k,tube_current_ma,reference_ni_hu\n";
    for (const auto& r : levels) s << r.level << ',' << r.k << ',' << r.tube_current_ma << ',' << r.reference_ni << '\n';
    return s.str();
  }
  s << "level,k,tube_current_ma,reference_ni_hu,negan_ni_hu,baseline_ni_hu,negan_nps_similarity,"
       "baseline_nps_similarity\n";
  for (const auto& r : levels)
    s << r.level << ',' << r.k << ',' << r.tube_current_ma << ',' << r.reference_ni << ',' << r.negan_ni << ','
      << r.baseline_ni << ',' << r.negan_nps_similarity << ',' << r.baseline_nps_similarity << '\n';
  s << '\n' << "k,negan_ni_hu,baseline_ni_hu\n";
  for (const auto& r : sweep) s << r.k << ',' << r.negan_ni << ',' << r.baseline_ni << '\n';
  return s.str();
}

EvaluationReport cmd_evaluate(const RunConfig& cfg, const fs::path& manifest_path,
                              const std::optional<fs::path>& checkpoint, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const std::uint64_t seed = cfg.required_seed();
  require_output_dir(out_dir);
  const Manifest m = read_manifest(manifest_path);
  const auto test = load_split(m, manifest_path.parent_path(), "test");
  require(!test.empty(), ErrorCategory::state, "evaluate: the manifest has no test split");
  std::vector<const LoadedSample*> uniform;
  for (const auto& s : test)
    if (s.record.kind == "uniform") uniform.push_back(&s);
  require(!uniform.empty(), ErrorCategory::state, "evaluate: the test split has no uniform phantom");
  const std::size_t grid = m.geometry.grid;
  require(cfg.nps_patch <= grid, ErrorCategory::config, "nps_patch: larger than the image grid");
  const auto& disk = uniform.front()->record.ellipses;
  require(disk.size() == 1 && std::sqrt(2.0) * static_cast<double>(cfg.nps_patch) / static_cast<double>(grid) <=
                                  std::min(disk[0].a, disk[0].b),
          ErrorCategory::config, "nps_patch: the patch does not fit inside the uniform disk");

  EvaluationReport rep;
  rep.reference_only = cfg.eval_k.empty();
  std::optional<negan::NeganModel> model;
  std::optional<Decomposer> decomposer;
  if (!rep.reference_only) {
    require(checkpoint.has_value(), ErrorCategory::config, "evaluate: --checkpoint required unless eval_k is empty");
    const auto c = io::Container::read(*checkpoint);
    model.emplace(negan::NeganModel::load(c));
    require(model->config().noise_factors == m.noise_factors, ErrorCategory::state,
            "evaluate: checkpoint levels do not match the manifest");
    decomposer.emplace(m.scheme, checkpoint_denoiser(c, m.scheme));
  }
  const std::size_t levels = m.lower_levels();

  // noise indices on the uniform test phantoms
  rep.levels.resize(levels);
  for (std::size_t j = 1; j <= levels; ++j) {
    rep.levels[j - 1].level = j;
    rep.levels[j - 1].k = m.noise_factors[j - 1];
    rep.levels[j - 1].tube_current_ma = m.tube_currents[j];
  }
  rep.sweep.resize(cfg.eval_k.size());
  for (std::size_t i = 0; i < cfg.eval_k.size(); ++i) rep.sweep[i].k = cfg.eval_k[i];
  const double nu = static_cast<double>(uniform.size());
  for (const auto* s : uniform) {
    rep.hdct_ni += noise_index_hu(s->doses.front(), s->clean, cfg) / nu;
    for (std::size_t j = 1; j <= levels; ++j) rep.levels[j - 1].reference_ni += noise_index_hu(s->doses[j], s->clean, cfg) / nu;
    if (rep.reference_only) continue;
    const auto pair = (*decomposer)(s->doses.front(), s->clean, s->record.dose_seeds.front());
    for (std::size_t j = 1; j <= levels; ++j) {
      auto& row = rep.levels[j - 1];
      row.negan_ni += noise_index_hu(model->generate(pair.x0, pair.n0, row.k), pair.x0, cfg) / nu;
      row.baseline_ni += noise_index_hu(decompose::scaled_addition_baseline(pair, row.k), pair.x0, cfg) / nu;
    }
    for (auto& row : rep.sweep) {
      row.negan_ni += noise_index_hu(model->generate(pair.x0, pair.n0, row.k), pair.x0, cfg) / nu;
      row.baseline_ni += noise_index_hu(decompose::scaled_addition_baseline(pair, row.k), pair.x0, cfg) / nu;
    }
  }

  // k = 0 reconstruction error over every test phantom
  if (!rep.reference_only) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : test) {
      const auto pair = (*decomposer)(s.doses.front(), s.clean, s.record.dose_seeds.front());
      const Image2D zero(pair.n0.rows(), pair.n0.cols(), pair.n0.spacing());
      const Image2D out = model->generate(pair.x0, zero, 0.0);
      for (std::size_t i = 0; i < out.size(); ++i) total += std::abs(out[i] - pair.x0[i]);
      count += out.size();
    }
    rep.zero_factor_mae = total / static_cast<double>(count) * m.window.scale();
  }

  // repeated scans of the first uniform phantom
  const auto* u = uniform.front();
  const Image2D object = phantom::render(u->record.ellipses, grid, m.geometry.pixel_spacing);
  const std::size_t corner = (grid - cfg.nps_patch) / 2;
  const metrics::Patch patch{corner, corner, cfg.nps_patch, cfg.nps_patch};
  std::vector<std::vector<Image2D>> reference(levels), generated(levels), baseline(levels);
  for (std::size_t r = 0; r < cfg.nps_realizations; ++r) {
    noise::DoseSpec hd{m.tube_currents[0], m.photons_per_ma, m.electronic_sigma, derive_seed(seed, "nps-hdct", r)};
    std::optional<decompose::DecompositionPair> pair;
    if (!rep.reference_only) pair = (*decomposer)(noise::simulate_ldct(object, m.geometry, hd), u->clean, hd.seed);
    for (std::size_t j = 1; j <= levels; ++j) {
      noise::DoseSpec ld{m.tube_currents[j], m.photons_per_ma, m.electronic_sigma, derive_seed(seed, "nps-ref", r, j)};
      reference[j - 1].push_back(noise::simulate_ldct(object, m.geometry, ld));
      if (pair) {
        generated[j - 1].push_back(model->generate(pair->x0, pair->n0, m.noise_factors[j - 1]));
        baseline[j - 1].push_back(decompose::scaled_addition_baseline(*pair, m.noise_factors[j - 1]));
      }
    }
  }
  for (std::size_t j = 0; j < levels; ++j) {
    rep.reference_nps.push_back(metrics::nps(reference[j], std::span(&patch, 1)));
    if (rep.reference_only) continue;
    rep.negan_nps.push_back(metrics::nps(generated[j], std::span(&patch, 1)));
    rep.baseline_nps.push_back(metrics::nps(baseline[j], std::span(&patch, 1)));
    rep.levels[j].negan_nps_similarity = metrics::nps_similarity(rep.negan_nps[j], rep.reference_nps[j]);
    rep.levels[j].baseline_nps_similarity = metrics::nps_similarity(rep.baseline_nps[j], rep.reference_nps[j]);
  }

  // white-noise self-check of the NPS normalisation
  {
    std::mt19937_64 rng(derive_seed(seed, "parseval"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Image2D> white;
    for (std::size_t r = 0; r < cfg.nps_realizations; ++r) {
      Image2D img(cfg.nps_patch, cfg.nps_patch, m.geometry.pixel_spacing);
      for (double& v : img.values()) v = gauss(rng);
      white.push_back(std::move(img));
    }
    const metrics::Patch whole{0, 0, cfg.nps_patch, cfg.nps_patch};
    rep.parseval_ratio = metrics::nps(white, std::span(&whole, 1)).integral();
  }

  fs::create_directories(out_dir);
  write_text(out_dir / "report.csv", rep.text());
  io::Container nps_out;
  for (std::size_t j = 0; j < levels; ++j) {
    const std::string tag = "level" + std::to_string(j + 1);
    metrics::write_nps_text(out_dir / ("nps_reference_" + tag + ".csv"), rep.reference_nps[j]);
    metrics::add_nps(nps_out, rep.reference_nps[j], "reference." + tag + ".");
    if (rep.reference_only) continue;
    metrics::write_nps_text(out_dir / ("nps_negan_" + tag + ".csv"), rep.negan_nps[j]);
    metrics::write_nps_text(out_dir / ("nps_baseline_" + tag + ".csv"), rep.baseline_nps[j]);
    metrics::add_nps(nps_out, rep.negan_nps[j], "negan." + tag + ".");
    metrics::add_nps(nps_out, rep.baseline_nps[j], "baseline." + tag + ".");
  }
  nps_out.write(out_dir / "nps.ldct");
  log << "evaluate: report written to " << (out_dir / "report.csv").string() << '\n';
  return rep;
}

}  // namespace ldct::pipeline
