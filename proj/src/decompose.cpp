#include "ldct/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"
#include "ldct/negan/train.hpp"
#include "ldct/nn/checkpoint.hpp"

namespace ldct::decompose {

std::string to_string(Scheme scheme) { return scheme == Scheme::simulation ? "simulation" : "denoiser"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "simulation") return Scheme::simulation;
  if (name == "denoiser") return Scheme::denoiser;
  fail(ErrorCategory::config, "unknown decomposition scheme '" + name + "' (expected simulation or denoiser)");
}

DecompositionPair difference_pair(const Image2D& hdct, Image2D x0, Scheme scheme, std::string provenance) {
  require(hdct.same_grid(x0), ErrorCategory::shape_mismatch,
          "decomposition: HDCT " + hdct.shape_string() + " vs clean " + x0.shape_string());
  DecompositionPair pair;
  pair.n0 = hdct - x0;
  for (std::size_t i = 0; i < hdct.size(); ++i)
    require(x0[i] + pair.n0[i] == hdct[i], ErrorCategory::state,
            "decomposition: pixel " + std::to_string(i) + " is not exactly representable as x0 + n0");
  pair.x0 = std::move(x0);
  pair.scheme = scheme;
  pair.provenance = std::move(provenance);
  return pair;
}

DecompositionPair simulation_scheme(const Image2D& object, const ct::ScanGeometry& geom,
                                    const noise::DoseSpec& hd_dose) {
  const Image2D hdct = noise::simulate_ldct(object, geom, hd_dose);
  return difference_pair(hdct, noise::reconstruct_clean(object, geom), Scheme::simulation,
                         "seed " + std::to_string(hd_dose.seed));
}

void DenoiserConfig::validate() const {
  require(network.in_channels == 1, ErrorCategory::config, "denoiser: the network takes one input channel");
  require(epochs >= 0 && batch >= 1 && patch >= 16 && patch % 4 == 0, ErrorCategory::config,
          "denoiser: invalid epochs, batch or patch");
  window.validate();
}

Denoiser::Denoiser(const negan::GeneratorConfig& net, const negan::NormWindow& window, std::uint64_t seed)
    : net_(net, seed), window_(window) {
  require(net.in_channels == 1, ErrorCategory::config, "denoiser: the network takes one input channel");
}

Image2D Denoiser::apply(const Image2D& hdct) {
  nn::Tape<float> tape;
  auto x = tape.constant(negan::to_tensor<float>(std::span(&hdct, 1), window_, false));
  auto y = net_.forward(tape, x, negan::ParamMode::frozen);
  return negan::from_tensor(y.value(), 0, window_, hdct.spacing());
}

std::string Denoiser::checkpoint_id() const {
  io::Container c;
  nn::store_params(c, net_.params(), "");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : c.serialize()) h = (h ^ static_cast<std::uint64_t>(b)) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("denoiser-") + buf;
}

void Denoiser::store(io::Container& out) const {
  io::KeyValues kv;
  kv.set("format", std::string("denoiser"));
  kv.set("window_low", window_.low);
  kv.set("window_high", window_.high);
  kv.set("base_width", static_cast<double>(net_.config().base_width));
  kv.set("residual_blocks", static_cast<double>(net_.config().residual_blocks));
  kv.set("input_skip", std::string(net_.config().input_skip ? "true" : "false"));
  kv.set("output_skip", std::string(negan::to_string(net_.config().output_skip)));
  out.add_text("denoiser.header", kv.serialize());
  nn::store_params(out, net_.params(), "denoiser.");
}

Denoiser Denoiser::load(const io::Container& in) {
  const auto* header = in.find("denoiser.header");
  require(header != nullptr, ErrorCategory::format, "checkpoint has no denoiser.header entry");
  const auto kv = io::KeyValues::parse(header->as_text(), "denoiser header");
  require(kv.text("format") == "denoiser", ErrorCategory::format, "checkpoint is not a denoiser");
  negan::GeneratorConfig net;
  net.in_channels = 1;
  net.base_width = kv.unsigned_integer("base_width");
  net.residual_blocks = kv.unsigned_integer("residual_blocks");
  net.input_skip = kv.boolean("input_skip", true);
  net.output_skip = negan::output_skip_from_string(kv.text("output_skip"));
  negan::NormWindow window{kv.number("window_low"), kv.number("window_high")};
  kv.reject_unconsumed();
  window.validate();
  Denoiser d(net, window, 0);
  nn::load_params(in, d.net_.params(), "denoiser.");
  return d;
}

Denoiser train_denoiser(std::span<const std::pair<Image2D, Image2D>> pairs, const DenoiserConfig& cfg,
                        std::vector<double>* epoch_losses) {
  cfg.validate();
  require(!pairs.empty(), ErrorCategory::invalid_argument, "train_denoiser: no training pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    require(pairs[i].first.same_grid(pairs[i].second), ErrorCategory::shape_mismatch,
            "train_denoiser: pair " + std::to_string(i) + " is not co-registered");
    require(pairs[i].first.rows() >= cfg.patch && pairs[i].first.cols() >= cfg.patch, ErrorCategory::shape_mismatch,
            "train_denoiser: pair " + std::to_string(i) + " is smaller than the patch");
  }
  Denoiser den(cfg.network, cfg.window, cfg.seed);
  auto& params = den.network().params();
  auto state = nn::AdamState<float>::for_params(params, cfg.schedule.base_lr, cfg.beta1, cfg.beta2);
  std::vector<std::size_t> order(pairs.size());
  std::vector<Image2D> in, out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto rng = negan::epoch_rng(cfg.seed ^ 0x64656e6fULL, epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    state.lr = nn::lr_schedule(epoch, cfg.schedule);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      in.clear();
      out.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch); ++i) {
        const auto& [hd, ld] = pairs[order[i]];
        const auto crop = negan::random_crop(hd.rows(), hd.cols(), cfg.patch, rng);
        in.push_back(hd.crop(crop.row, crop.col, cfg.patch, cfg.patch));
        out.push_back(ld.crop(crop.row, crop.col, cfg.patch, cfg.patch));
      }
      nn::Tape<float> tape;
      auto x = tape.constant(negan::to_tensor<float>(in, cfg.window, false));
      auto y = tape.constant(negan::to_tensor<float>(out, cfg.window, false));
      auto loss = nn::mean_abs_diff(den.network().forward(tape, x), y);
      total += static_cast<double>(loss.value()[0]);
      ++steps;
      tape.backward(loss);
      nn::adam_step(params, state);
    }
    if (epoch_losses) epoch_losses->push_back(total / static_cast<double>(steps));
  }
  return den;
}

DecompositionPair denoiser_scheme(const Image2D& hdct, Denoiser& denoiser) {
  return difference_pair(hdct, denoiser.apply(hdct), Scheme::denoiser, denoiser.checkpoint_id());
}

Image2D scaled_addition_baseline(const DecompositionPair& pair, double k) {
  require(std::isfinite(k) && k >= 0.0, ErrorCategory::invalid_argument, "scaled addition: k must be >= 0");
  require(pair.x0.same_grid(pair.n0), ErrorCategory::shape_mismatch, "scaled addition: x0 and n0 differ in shape");
  Image2D out = pair.x0;
  if (k == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += k * pair.n0[i];
  return out;
}

}  // namespace ldct::decompose
