#include "ldct/negan/model.hpp"

#include <cmath>
#include <utility>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"
#include "ldct/negan/losses.hpp"
#include "ldct/nn/checkpoint.hpp"

namespace ldct::negan {

void NormWindow::validate() const {
  require(std::isfinite(low) && std::isfinite(high) && high > low, ErrorCategory::config,
          "normalization window needs low < high");
}

template <typename T>
nn::Tensor<T> to_tensor(std::span<const Image2D> images, const NormWindow& window, bool noise) {
  require(!images.empty(), ErrorCategory::invalid_argument, "to_tensor: no images");
  const Image2D& first = images.front();
  nn::Tensor<T> t({images.size(), 1, first.rows(), first.cols()});
  const double s = window.scale();
  for (std::size_t n = 0; n < images.size(); ++n) {
    require(images[n].same_grid(first), ErrorCategory::shape_mismatch,
            "to_tensor: image " + images[n].shape_string() + " differs from " + first.shape_string());
    T* out = t.data() + n * first.size();
    for (std::size_t i = 0; i < first.size(); ++i)
      out[i] = static_cast<T>(noise ? images[n][i] * s : window.to_unit(images[n][i]));
  }
  return t;
}

template <typename T>
Image2D from_tensor(const nn::Tensor<T>& t, std::size_t n, const NormWindow& window, double spacing) {
  require(t.rank() == 4 && t.dim(1) == 1 && n < t.dim(0), ErrorCategory::shape_mismatch,
          "from_tensor: cannot take sample " + std::to_string(n) + " of " + nn::to_string(t.shape()));
  Image2D img(t.dim(2), t.dim(3), spacing);
  const T* in = t.data() + n * img.size();
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = window.from_unit(static_cast<double>(in[i]));
  return quantize_f32(std::move(img));
}

template nn::Tensor<float> to_tensor(std::span<const Image2D>, const NormWindow&, bool);
template nn::Tensor<double> to_tensor(std::span<const Image2D>, const NormWindow&, bool);
template Image2D from_tensor(const nn::Tensor<float>&, std::size_t, const NormWindow&, double);
template Image2D from_tensor(const nn::Tensor<double>&, std::size_t, const NormWindow&, double);

void NeganConfig::validate() const {
  require(!noise_factors.empty(), ErrorCategory::config, "negan: at least one lower-dose level is required");
  for (double k : noise_factors)
    require(std::isfinite(k) && k > 0.0, ErrorCategory::config, "negan: noise factors must be positive");
  require(generator.in_channels == 2, ErrorCategory::config, "negan: the generator takes two input channels");
  window.validate();
}

std::string header_text(const NeganConfig& cfg) {
  io::KeyValues kv;
  kv.set("format", std::string("negan"));
  kv.set("levels", static_cast<double>(cfg.levels()));
  kv.set("noise_factors", cfg.noise_factors);
  kv.set("window_low", cfg.window.low);
  kv.set("window_high", cfg.window.high);
  kv.set("g_in_channels", static_cast<double>(cfg.generator.in_channels));
  kv.set("g_base_width", static_cast<double>(cfg.generator.base_width));
  kv.set("g_residual_blocks", static_cast<double>(cfg.generator.residual_blocks));
  kv.set("g_input_skip", std::string(cfg.generator.input_skip ? "true" : "false"));
  kv.set("g_output_skip", std::string(to_string(cfg.generator.output_skip)));
  kv.set("d_base_width", static_cast<double>(cfg.discriminator.base_width));
  kv.set("d_depth", static_cast<double>(cfg.discriminator.depth));
  kv.set("d_input", std::string(to_string(cfg.discriminator.input)));
  kv.set("d_residual_gain", cfg.discriminator.residual_gain);
  kv.set("d_instance_norm", std::string(cfg.discriminator.instance_norm ? "true" : "false"));
  return kv.serialize();
}

NeganConfig parse_header(const std::string& text) {
  const auto kv = io::KeyValues::parse(text, "checkpoint header");
  require(kv.text("format") == "negan", ErrorCategory::format, "checkpoint is not an NE-GAN model");
  NeganConfig cfg;
  const auto levels = kv.unsigned_integer("levels");
  cfg.noise_factors = kv.numbers("noise_factors");
  require(cfg.noise_factors.size() == levels, ErrorCategory::format,
          "checkpoint header: level count disagrees with the noise factor list");
  cfg.window = {kv.number("window_low"), kv.number("window_high")};
  cfg.generator.in_channels = kv.unsigned_integer("g_in_channels");
  cfg.generator.base_width = kv.unsigned_integer("g_base_width");
  cfg.generator.residual_blocks = kv.unsigned_integer("g_residual_blocks");
  cfg.generator.input_skip = kv.boolean("g_input_skip", true);
  cfg.generator.output_skip = output_skip_from_string(kv.text("g_output_skip"));
  cfg.discriminator.base_width = kv.unsigned_integer("d_base_width");
  cfg.discriminator.depth = kv.unsigned_integer("d_depth");
  cfg.discriminator.input = critic_input_from_string(kv.text("d_input"));
  cfg.discriminator.residual_gain = kv.number("d_residual_gain");
  cfg.discriminator.instance_norm = kv.boolean("d_instance_norm", false);
  kv.reject_unconsumed();
  cfg.validate();
  return cfg;
}

namespace {
std::vector<Discriminator<float>> make_discriminators(const NeganConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<Discriminator<float>> out;
  for (std::size_t j = 1; j <= cfg.levels(); ++j) out.emplace_back(cfg.discriminator, seed + 1000003ULL * j);
  return out;
}
}  // namespace

NeganModel::NeganModel(NeganConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), generator_(cfg_.generator, seed), discriminators_(make_discriminators(cfg_, seed)) {}

Discriminator<float>& NeganModel::discriminator(std::size_t level) {
  return const_cast<Discriminator<float>&>(std::as_const(*this).discriminator(level));
}

const Discriminator<float>& NeganModel::discriminator(std::size_t level) const {
  require(level >= 1 && level <= discriminators_.size(), ErrorCategory::invalid_argument,
          "level " + std::to_string(level) + " has no discriminator (model has " +
              std::to_string(discriminators_.size()) + ")");
  return discriminators_[level - 1];
}

std::vector<Image2D> NeganModel::generate(std::span<const Image2D> x0, std::span<const Image2D> n0, double k) {
  require(std::isfinite(k) && k >= 0.0, ErrorCategory::invalid_argument, "generate: noise factor must be >= 0");
  require(x0.size() == n0.size() && !x0.empty(), ErrorCategory::shape_mismatch,
          "generate: need equally many clean and noise images");
  for (std::size_t i = 0; i < x0.size(); ++i)
    require(x0[i].same_grid(n0[i]), ErrorCategory::shape_mismatch,
            "generate: clean " + x0[i].shape_string() + " vs noise " + n0[i].shape_string());
  nn::Tape<float> tape;
  auto xv = tape.constant(to_tensor<float>(x0, cfg_.window, false));
  auto nv = tape.constant(to_tensor<float>(n0, cfg_.window, true));
  auto out = generator_.forward(tape, entangle(tape, xv, nv, k), ParamMode::frozen);
  std::vector<Image2D> images;
  for (std::size_t i = 0; i < x0.size(); ++i)
    images.push_back(from_tensor(out.value(), i, cfg_.window, x0[i].spacing()));
  return images;
}

Image2D NeganModel::generate(const Image2D& x0, const Image2D& n0, double k) {
  return std::move(generate(std::span(&x0, 1), std::span(&n0, 1), k).front());
}

void NeganModel::store(io::Container& out) const {
  out.add_text("negan.header", header_text(cfg_));
  nn::store_params(out, generator_.params(), "g.");
  for (std::size_t j = 0; j < discriminators_.size(); ++j)
    nn::store_params(out, discriminators_[j].params(), "d" + std::to_string(j + 1) + ".");
}

NeganModel NeganModel::load(const io::Container& in) {
  const auto* header = in.find("negan.header");
  require(header != nullptr, ErrorCategory::format, "checkpoint has no negan.header entry");
  NeganModel model(parse_header(header->as_text()), 0);
  nn::load_params(in, model.generator_.params(), "g.");
  for (std::size_t j = 0; j < model.discriminators_.size(); ++j)
    nn::load_params(in, model.discriminators_[j].params(), "d" + std::to_string(j + 1) + ".");
  return model;
}

bool operator==(const NeganModel& a, const NeganModel& b) {
  if (!(a.cfg_ == b.cfg_) || !(a.generator_.params() == b.generator_.params())) return false;
  for (std::size_t j = 0; j < a.discriminators_.size(); ++j)
    if (!(a.discriminators_[j].params() == b.discriminators_[j].params())) return false;
  return true;
}

}  // namespace ldct::negan
