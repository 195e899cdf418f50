#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "ldct/metrics.hpp"
#include "ldct/noise.hpp"
#include "ldct/pipeline/commands.hpp"
#include "support.hpp"

using namespace ldct;
using namespace ldct::pipeline;
namespace fs = std::filesystem;

namespace {

RunConfig workflow_config(const std::string& extra = "") {
  return RunConfig::parse(R"(
seed = 23
train_phantoms = 8
test_phantoms = 2
test_uniform = 1
grid = 32
pixel_cm = 0.4
views = 45
patch = 16
batch = 2
epochs = 2
flat_epochs = 1
decay_epochs = 1
denoiser_epochs = 2
denoiser_patch = 16
denoiser_batch = 2
nps_patch = 16
nps_realizations = 4
)" + extra);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct ScanSet {
  std::vector<Image2D> clean, hdct, ldct;
};

// Random phantoms scanned noiselessly and twice with independent noise.
ScanSet scan_phantoms(std::size_t count, std::uint64_t seed, const ct::ScanGeometry& g, const noise::DoseSpec& dose) {
  ScanSet s;
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = phantom::random_phantom(seed + i, {}, g.grid, g.pixel_spacing);
    s.clean.push_back(noise::reconstruct_clean(p.image, g));
    auto hd = dose;
    hd.seed = 1000 * seed + 2 * i;
    s.hdct.push_back(noise::simulate_ldct(p.image, g, hd));
    auto ld = dose;
    ld.seed = 1000 * seed + 2 * i + 1;
    s.ldct.push_back(noise::simulate_ldct(p.image, g, ld));
  }
  return s;
}

}  // namespace

TEST_SUITE("workflow") {

TEST_CASE("simulate, train, generate and evaluate end to end") {
  const auto dir = testing::scratch_dir("workflow_e2e");
  const auto cfg = workflow_config();
  std::ostringstream log;
  const auto manifest = cmd_simulate(cfg, dir / "data", log);
  CHECK(fs::exists(dir / "data" / "manifest.txt"));
  const auto trained = cmd_train(cfg, dir / "data" / "manifest.txt", dir / "train", std::nullopt, log);
  REQUIRE(trained.history.size() == 2);
  CHECK(fs::exists(trained.checkpoint));
  CHECK(fs::exists(trained.log_file));
  CHECK(negan::parse_log(slurp(trained.log_file)) == trained.history);

  const std::vector<double> ks{0.5, 1.8};
  const auto gen = cmd_generate(trained.checkpoint, dir / "data" / "manifest.txt", ks, dir / "generate", log);
  CHECK(gen.images == 3 * ks.size());
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "generate"))
    if (e.is_regular_file() && e.path().extension() == ".ldct") {
      const auto img = load_image(e.path());
      CHECK(img.rows() == 32);
      ++files;
    }
  CHECK(files == gen.images);

  const auto report = cmd_evaluate(cfg, dir / "data" / "manifest.txt", trained.checkpoint, dir / "evaluate", log);
  CHECK_FALSE(report.reference_only);
  CHECK(report.levels.size() == 3);
  CHECK(report.sweep.size() == cfg.eval_k.size());
  CHECK(report.sweep.front().negan_ni >= 0.0);
  CHECK(report.sweep.front().baseline_ni == 0.0);
  for (const auto& row : report.levels) {
    CHECK(row.reference_ni > 0.0);
    CHECK(std::isfinite(row.negan_nps_similarity));
  }
  CHECK(fs::exists(dir / "evaluate" / "report.csv"));
  CHECK(slurp(dir / "evaluate" / "report.csv") == report.text());
}

TEST_CASE("resumed training matches an uninterrupted run") {
  const auto dir = testing::scratch_dir("workflow_resume");
  std::ostringstream log;
  const auto full = workflow_config();
  cmd_simulate(full, dir / "data", log);
  const auto manifest = dir / "data" / "manifest.txt";
  const auto straight = cmd_train(full, manifest, dir / "straight", std::nullopt, log);

  auto first = workflow_config();
  first.train.epochs = 1;
  const auto half = cmd_train(first, manifest, dir / "split", std::nullopt, log);
  REQUIRE(half.history.size() == 1);
  const auto resumed = cmd_train(full, manifest, dir / "split", half.checkpoint, log);
  CHECK(resumed.history == straight.history);
  CHECK(slurp(resumed.checkpoint) == slurp(straight.checkpoint));
}

TEST_CASE("denoiser-scheme workflow runs end to end") {
  const auto dir = testing::scratch_dir("workflow_denoiser");
  const auto cfg = workflow_config("scheme = denoiser\n");
  std::ostringstream log;
  cmd_simulate(cfg, dir / "data", log);
  const auto trained = cmd_train(cfg, dir / "data" / "manifest.txt", dir / "train", std::nullopt, log);
  CHECK(trained.history.size() == 2);
  const auto report = cmd_evaluate(cfg, dir / "data" / "manifest.txt", trained.checkpoint, dir / "evaluate", log);
  CHECK(report.levels.size() == 3);
}

TEST_CASE("denoiser trained on independent noisy pairs removes noise without bias") {
  const auto g = ct::ScanGeometry::for_grid(64, 0.4, 90);
  // A dose low enough that noise, not anatomy, dominates the regression.
  noise::DoseSpec dose;
  dose.photons_per_ma = 20.0;
  const auto train = scan_phantoms(32, 40, g, dose);
  std::vector<std::pair<Image2D, Image2D>> pairs;
  for (std::size_t i = 0; i < train.hdct.size(); ++i) pairs.emplace_back(train.hdct[i], train.ldct[i]);
  decompose::DenoiserConfig dc;
  dc.network = {1, 8, 2, true, negan::OutputSkip::clean};
  dc.patch = 32;
  dc.batch = 4;
  dc.epochs = 80;
  dc.schedule = {1e-3, 60, 20};
  dc.seed = 3;
  std::vector<double> losses;
  auto denoiser = decompose::train_denoiser(pairs, dc, &losses);
  CHECK(losses.back() < losses.front());

  // Held-out uniform disk, scanned repeatedly.
  const auto disk = phantom::render(phantom::uniform_disk(0.8, 0.2), 64, 0.4);
  const auto clean = noise::reconstruct_clean(disk, g);
  const auto roi = metrics::central_roi(64, 64, 0.4);
  std::vector<double> bias;
  double noisy_var = 0.0, x0_var = 0.0;
  const int scans = 8;
  for (int s = 0; s < scans; ++s) {
    auto hd = dose;
    hd.seed = 500 + s;
    const auto pair = decompose::denoiser_scheme(noise::simulate_ldct(disk, g, hd), denoiser);
    const auto hd_noise = pair.hdct() - clean;
    const auto x0_err = pair.x0 - clean;
    std::vector<double> e;
    for (auto i : roi) e.push_back(x0_err[i]);
    bias.push_back(metrics::mean(e));
    noisy_var += std::pow(metrics::noise_index(hd_noise), 2);
    x0_var += std::pow(metrics::noise_index(x0_err), 2);
  }
  const double hd_ni = std::sqrt(noisy_var / scans), x0_ni = std::sqrt(x0_var / scans);
  const double mean_bias = metrics::mean(bias);
  MESSAGE("HDCT noise " << hd_ni << ", x0 error " << x0_ni << ", mean bias " << mean_bias);
  CHECK(x0_ni < 0.6 * hd_ni);
  CHECK(std::abs(mean_bias) < 0.25 * hd_ni);
}

TEST_CASE("generation throughput for 100 images of 64 x 64") {
  negan::NeganConfig nc;
  nc.noise_factors = {1.3, 1.8, 3.0};
  negan::NeganModel model(nc, 9);
  std::vector<Image2D> x0, n0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Image2D a(64, 64, 0.2), b(64, 64, 0.2);
    const auto ta = testing::random_tensor({64, 64}, 2 * i, 0.0, 0.4);
    const auto tb = testing::random_tensor({64, 64}, 2 * i + 1, -0.02, 0.02);
    for (std::size_t p = 0; p < a.size(); ++p) {
      a[p] = ta[p];
      b[p] = tb[p];
    }
    x0.push_back(std::move(a));
    n0.push_back(std::move(b));
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t produced = 0;
  for (std::size_t start = 0; start < 100; start += 10) {
    const auto out = model.generate(std::span(x0).subspan(start, 10), std::span(n0).subspan(start, 10), 1.8);
    produced += out.size();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("100 images in " << seconds << " s");
  CHECK(produced == 100);
  CHECK(seconds < 10.0);
}

}  // TEST_SUITE
