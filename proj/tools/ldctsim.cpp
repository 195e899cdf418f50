// Command-line front end: simulate, train, generate, evaluate.
#include <CLI11.hpp>

#include <iostream>

#include "ldct/error.hpp"
#include "ldct/pipeline/commands.hpp"

namespace {

using namespace ldct;

struct Options {
  std::string config;
  std::string manifest;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<double> k;
};

pipeline::RunConfig load_config(const Options& o, bool required) {
  require(!required || !o.config.empty() || o.seed, ErrorCategory::config, "--config is required");
  pipeline::RunConfig cfg = o.config.empty() ? pipeline::RunConfig{} : pipeline::RunConfig::read(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-dose CT simulation with a noise-entangled GAN"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "key = value run configuration");
    cmd->add_option("--seed", o.seed, "run seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory")->required();
  };
  auto* simulate = app.add_subcommand("simulate", "synthesize a multi-dose dataset and manifest");
  add_common(simulate);
  auto* train = app.add_subcommand("train", "train the NE-GAN (and denoiser) on a dataset");
  add_common(train);
  train->add_option("--manifest", o.manifest, "dataset manifest")->required();
  train->add_option("--checkpoint", o.checkpoint, "resume from this checkpoint");
  auto* generate = app.add_subcommand("generate", "generate LDCT images for the test split");
  generate->add_option("--manifest", o.manifest, "dataset manifest")->required();
  generate->add_option("--checkpoint", o.checkpoint, "trained model")->required();
  generate->add_option("--k", o.k, "noise factor (repeatable)")->required()->take_all();
  generate->add_option("--out", o.out, "output directory")->required();
  auto* evaluate = app.add_subcommand("evaluate", "noise-index and NPS report");
  add_common(evaluate);
  evaluate->add_option("--manifest", o.manifest, "dataset manifest")->required();
  evaluate->add_option("--checkpoint", o.checkpoint, "trained model");
  evaluate->add_option("--k", o.k, "noise factors of the sweep (repeatable; overrides eval_k)")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) {
      pipeline::cmd_simulate(load_config(o, true), o.out, std::cerr);
    } else if (train->parsed()) {
      std::optional<std::filesystem::path> resume;
      if (!o.checkpoint.empty()) resume = o.checkpoint;
      pipeline::cmd_train(load_config(o, true), o.manifest, o.out, resume, std::cerr);
    } else if (generate->parsed()) {
      const auto res = pipeline::cmd_generate(o.checkpoint, o.manifest, o.k, o.out, std::cerr);
      std::cout << "throughput_images_per_second," << res.images_per_second << '\n';
    } else if (evaluate->parsed()) {
      auto cfg = load_config(o, true);
      if (evaluate->count("--k") > 0) cfg.eval_k = o.k;
      std::optional<std::filesystem::path> ck;
      if (!o.checkpoint.empty()) ck = o.checkpoint;
      std::cout << pipeline::cmd_evaluate(cfg, o.manifest, ck, o.out, std::cerr).text();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
