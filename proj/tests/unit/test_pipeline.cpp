#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "ldct/error.hpp"
#include "ldct/pipeline/commands.hpp"
#include "support.hpp"

using namespace ldct;
using namespace ldct::pipeline;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  return RunConfig::parse(R"(
seed = 17
train_phantoms = 6
test_phantoms = 1
test_uniform = 1
grid = 32
pixel_cm = 0.4
views = 45
patch = 16
denoiser_patch = 16
nps_patch = 16
nps_realizations = 4
eval_k =
)");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorCategory category_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("no error thrown");
  return ErrorCategory::state;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config defaults and round trip") {
  const auto def = RunConfig::parse("");
  CHECK_FALSE(def.seed.has_value());
  CHECK(def.doses_ma == std::vector<double>{90, 70, 50, 30});
  CHECK(def.train.schedule.base_lr == 2e-4);
  CHECK(def.train.weights.fidelity == 10.0);
  CHECK(def.window.low == -0.2);
  CHECK(def.window.high == 0.6);
  CHECK(def.nps_realizations == 50);
  CHECK(def.nps_patch == 64);
  CHECK(def.eval_k == std::vector<double>{0, 1, 1.3, 1.8, 2.4, 3.0, 4.0});
  CHECK(def.generator.output_skip == negan::OutputSkip::entangled);

  auto cfg = small_config();
  cfg.scheme = decompose::Scheme::denoiser;
  cfg.dose_parameter = negan::DoseParameter::noise_index;
  cfg.train.weights.form = negan::AdversarialForm::minimax;
  cfg.generator.output_skip = negan::OutputSkip::clean;
  const auto back = RunConfig::parse(cfg.serialize());
  CHECK(back.serialize() == cfg.serialize());
  CHECK(back.seed == 17u);
  CHECK(back.eval_k.empty());
  CHECK(back.scheme == decompose::Scheme::denoiser);
  CHECK(back.generator.output_skip == negan::OutputSkip::clean);
}

TEST_CASE("config errors name the key") {
  CHECK(message_of([] { RunConfig::parse("colour = red\n"); }).find("colour") != std::string::npos);
  CHECK(category_of([] { RunConfig::parse("grid = many\n"); }) == ErrorCategory::config);
  CHECK(message_of([] { RunConfig::parse("grid = 30\n").validate(); }).find("grid") != std::string::npos);
  CHECK(message_of([] { RunConfig::parse("doses_ma = 30 90\n").validate(); }).find("doses_ma") != std::string::npos);
  CHECK(message_of([] { RunConfig::parse("scheme = oracle\n"); }).find("oracle") != std::string::npos);
  CHECK(message_of([] { RunConfig::parse("").required_seed(); }).find("seed") != std::string::npos);
  CHECK(category_of([] { RunConfig::read("/nonexistent/run.cfg"); }) == ErrorCategory::io);
}

TEST_CASE("derived seeds are distinct streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 4; ++b) seen.insert(derive_seed(17, "dose", a, b));
  seen.insert(derive_seed(17, "train-phantom", 0));
  seen.insert(derive_seed(18, "dose", 0, 0));
  CHECK(seen.size() == 202);
  CHECK(derive_seed(17, "dose", 3, 1) == derive_seed(17, "dose", 3, 1));
}

TEST_CASE("phantom list and tube currents") {
  const auto cfg = small_config();
  const auto list = make_phantoms(cfg);
  REQUIRE(list.size() == 8);
  CHECK(list[6].split == "test");
  CHECK(list[7].kind == "uniform");
  CHECK(list[0].seed != list[1].seed);
  std::ostringstream log;
  CHECK(resolve_tube_currents(cfg, log) == cfg.doses_ma);

  auto ni = cfg;
  ni.dose_parameter = negan::DoseParameter::noise_index;
  const auto ma = resolve_tube_currents(ni, log);
  REQUIRE(ma.size() == 4);
  // variance law: NI ratio r needs 1 / r^2 of the current
  CHECK(ma[1] == doctest::Approx(ma[0] / 4.0));
  CHECK(ma[3] == doctest::Approx(ma[0] / 16.0));
  CHECK(log.str().find("calibration") != std::string::npos);
}

TEST_CASE("ellipse lists round-trip") {
  const auto sl = phantom::shepp_logan();
  CHECK(parse_ellipses(format_ellipses(sl)) == sl);
  CHECK_THROWS_AS(parse_ellipses("0 0 1"), Error);
  CHECK_THROWS_AS(parse_ellipses("0 0 -1 1 0 1"), Error);
}

TEST_CASE("simulate writes a complete, reproducible dataset") {
  const auto dir = testing::scratch_dir("pipeline_simulate");
  const auto cfg = small_config();
  std::ostringstream log;
  const auto m = cmd_simulate(cfg, dir / "a", log);
  REQUIRE(m.samples.size() == 8);
  CHECK(m.noise_factors == std::vector<double>{1.3, 1.8, 3.0});
  CHECK(m.tube_currents == cfg.doses_ma);
  for (const auto& s : m.samples) {
    CHECK(s.doses.size() == 4);
    std::set<std::string> images{s.clean};
    images.insert(s.doses.begin(), s.doses.end());
    CHECK(images.size() == 5);
    for (const auto& f : images) CHECK(fs::exists(dir / "a" / f));
  }
  CHECK_THROWS_AS(m.validate(&dir), Error);  // paths are relative to "a"
  const fs::path base = dir / "a";
  CHECK_NOTHROW(m.validate(&base));

  const auto read = Manifest::read(dir / "a" / "manifest.txt");
  CHECK(read == m);
  CHECK(Manifest::parse(m.serialize()) == m);

  cmd_simulate(cfg, dir / "b", log);
  CHECK(slurp(dir / "a" / "manifest.txt") == slurp(dir / "b" / "manifest.txt"));
  for (const auto& s : m.samples) {
    CHECK(slurp(dir / "a" / s.clean) == slurp(dir / "b" / s.clean));
    for (const auto& f : s.doses) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  const auto test = load_split(m, base, "test");
  REQUIRE(test.size() == 2);
  CHECK(test[0].doses.size() == 4);
  const auto pair = simulation_pair(test[0]);
  CHECK(std::ranges::equal(pair.hdct().values(), test[0].doses[0].values()));
}

TEST_CASE("manifest validation") {
  const auto dir = testing::scratch_dir("pipeline_manifest");
  std::ostringstream log;
  auto m = cmd_simulate(small_config(), dir, log);
  auto bad = m;
  bad.noise_factors = {1.3, 1.8, 3.1};
  CHECK(category_of([&] { bad.validate(); }) == ErrorCategory::format);
  bad = m;
  bad.samples[0].doses.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.samples[0].split = "holdout";
  CHECK_THROWS_AS(bad.validate(), Error);
  fs::remove(dir / m.samples[2].doses[1]);
  CHECK(category_of([&] { m.validate(&dir); }) == ErrorCategory::io);
  CHECK(category_of([&] { Manifest::parse("version = 99\n"); }) == ErrorCategory::format);
}

TEST_CASE("commands validate before writing") {
  const auto dir = testing::scratch_dir("pipeline_validate");
  std::ostringstream log;
  auto cfg = small_config();
  cfg.views = 0;
  CHECK_THROWS_AS(cmd_simulate(cfg, dir / "out", log), Error);
  CHECK_FALSE(fs::exists(dir / "out"));
  cfg = small_config();
  cfg.seed.reset();
  CHECK_THROWS_AS(cmd_simulate(cfg, dir / "out", log), Error);
  CHECK_FALSE(fs::exists(dir / "out"));

  cmd_simulate(small_config(), dir / "data", log);
  const auto manifest = dir / "data" / "manifest.txt";
  CHECK_THROWS_AS(cmd_generate(dir / "missing.ldct", manifest, std::vector<double>{1.0}, dir / "gen", log), Error);
  CHECK_THROWS_AS(cmd_generate(dir / "missing.ldct", manifest, std::vector<double>{}, dir / "gen", log), Error);
  CHECK_FALSE(fs::exists(dir / "gen"));
  auto with_k = small_config();
  with_k.eval_k = {1.0};
  CHECK(category_of([&] { cmd_evaluate(with_k, manifest, std::nullopt, dir / "ev", log); }) ==
        ErrorCategory::config);
  CHECK_FALSE(fs::exists(dir / "ev"));
}

TEST_CASE("evaluation without factors reports reference data only") {
  const auto dir = testing::scratch_dir("pipeline_reference");
  std::ostringstream log;
  cmd_simulate(small_config(), dir / "data", log);
  const auto rep = cmd_evaluate(small_config(), dir / "data" / "manifest.txt", std::nullopt, dir / "ev", log);
  CHECK(rep.reference_only);
  REQUIRE(rep.levels.size() == 3);
  CHECK(rep.sweep.empty());
  CHECK(rep.reference_nps.size() == 3);
  CHECK(rep.negan_nps.empty());
  CHECK(rep.hdct_ni > 0.0);
  for (std::size_t j = 1; j < 3; ++j) CHECK(rep.levels[j].reference_ni > rep.levels[j - 1].reference_ni);
  CHECK(rep.parseval_ratio == doctest::Approx(1.0).epsilon(0.1));
  CHECK(fs::exists(dir / "ev" / "report.csv"));
  CHECK(fs::exists(dir / "ev" / "nps_reference_level3.csv"));
  CHECK_FALSE(fs::exists(dir / "ev" / "nps_negan_level1.csv"));
  CHECK(slurp(dir / "ev" / "report.csv") == rep.text());

  // a split without a test portion is rejected
  auto no_test = small_config();
  no_test.test_phantoms = 0;
  no_test.test_uniform = 0;
  cmd_simulate(no_test, dir / "train_only", log);
  CHECK(category_of([&] {
          cmd_evaluate(no_test, dir / "train_only" / "manifest.txt", std::nullopt, dir / "ev2", log);
        }) == ErrorCategory::state);
}

}  // TEST_SUITE
