#include "ldct/negan/networks.hpp"

#include <algorithm>
#include <cmath>

#include "ldct/error.hpp"

namespace ldct::negan {

std::string_view to_string(OutputSkip skip) {
  switch (skip) {
    case OutputSkip::none: return "none";
    case OutputSkip::clean: return "clean";
    case OutputSkip::entangled: return "entangled";
  }
  return "none";
}

OutputSkip output_skip_from_string(std::string_view text) {
  for (auto s : {OutputSkip::none, OutputSkip::clean, OutputSkip::entangled})
    if (to_string(s) == text) return s;
  fail(ErrorCategory::config, "unknown output skip '" + std::string(text) + "' (none, clean, entangled)");
}

std::string_view to_string(CriticInput input) {
  return input == CriticInput::image ? "image" : "residual";
}

CriticInput critic_input_from_string(std::string_view text) {
  for (auto i : {CriticInput::image, CriticInput::residual})
    if (to_string(i) == text) return i;
  fail(ErrorCategory::config, "unknown critic input '" + std::string(text) + "' (image, residual)");
}

namespace detail {

template <typename T>
ConvLayer Network<T>::add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                               std::size_t stride, std::size_t pad, std::size_t reflect, bool transposed,
                               bool norm, std::mt19937_64& rng) {
  using nn::ParamRole;
  ConvLayer layer;
  layer.stride = stride;
  layer.pad = pad;
  layer.reflect_pad = reflect;
  layer.transposed = transposed;
  nn::Shape wshape = transposed ? nn::Shape{in, out, kernel, kernel} : nn::Shape{out, in, kernel, kernel};
  layer.weight = params_.add(name + ".weight", ParamRole::conv_kernel,
                             nn::init_tensor<T>(ParamRole::conv_kernel, wshape, rng));
  layer.bias = params_.add(name + ".bias", ParamRole::bias, nn::init_tensor<T>(ParamRole::bias, {out}, rng));
  if (norm) {
    layer.has_norm = true;
    layer.norm_scale = params_.add(name + ".norm.scale", ParamRole::norm_scale,
                                   nn::init_tensor<T>(ParamRole::norm_scale, {out}, rng));
    layer.norm_shift = params_.add(name + ".norm.shift", ParamRole::norm_shift,
                                   nn::init_tensor<T>(ParamRole::norm_shift, {out}, rng));
  }
  return layer;
}

template <typename T>
nn::Var<T> Network<T>::use(nn::Tape<T>& tape, std::size_t index, ParamMode mode) {
  return mode == ParamMode::trainable ? tape.param(params_[index]) : tape.constant(params_[index].value);
}

template <typename T>
nn::Var<T> Network<T>::apply(nn::Tape<T>& tape, const ConvLayer& layer, nn::Var<T> x, ParamMode mode) {
  if (layer.reflect_pad > 0) x = nn::reflect_pad2d(x, layer.reflect_pad);
  auto w = use(tape, layer.weight, mode);
  auto b = use(tape, layer.bias, mode);
  x = layer.transposed ? nn::conv_transpose2d(x, w, std::optional(b), layer.stride, layer.pad, 1)
                       : nn::conv2d(x, w, std::optional(b), layer.stride, layer.pad);
  if (layer.has_norm)
    x = nn::instance_norm(x, std::optional(use(tape, layer.norm_scale, mode)),
                          std::optional(use(tape, layer.norm_shift, mode)));
  return x;
}

}  // namespace detail

template <typename T>
Generator<T>::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require(cfg.in_channels >= 1 && cfg.base_width >= 1, ErrorCategory::invalid_argument,
          "generator: channel counts must be >= 1");
  std::mt19937_64 rng(seed);
  const std::size_t w = cfg.base_width;
  encoder_.push_back(this->add_conv("enc0", cfg.in_channels, w, 7, 1, 0, 3, false, true, rng));
  encoder_.push_back(this->add_conv("enc1", w, 2 * w, 3, 2, 1, 0, false, true, rng));
  encoder_.push_back(this->add_conv("enc2", 2 * w, 4 * w, 3, 2, 1, 0, false, true, rng));
  for (std::size_t i = 0; i < cfg.residual_blocks; ++i) {
    const std::string name = "res" + std::to_string(i);
    blocks_.push_back(this->add_conv(name + ".a", 4 * w, 4 * w, 3, 1, 0, 1, false, true, rng));
    blocks_.push_back(this->add_conv(name + ".b", 4 * w, 4 * w, 3, 1, 0, 1, false, true, rng));
  }
  decoder_.push_back(this->add_conv("dec0", 4 * w, 2 * w, 3, 2, 1, 0, true, true, rng));
  decoder_.push_back(this->add_conv("dec1", 2 * w, w, 3, 2, 1, 0, true, true, rng));
  if (cfg.input_skip) fuse_ = this->add_conv("fuse", w + cfg.in_channels, w, 3, 1, 0, 1, false, false, rng);
  head_ = this->add_conv("head", w, 1, 7, 1, 0, 3, false, false, rng);
}

template <typename T>
nn::Var<T> Generator<T>::forward(nn::Tape<T>& tape, nn::Var<T> input, ParamMode mode) {
  const auto& s = input.shape();
  require(s.size() == 4 && s[1] == cfg_.in_channels, ErrorCategory::shape_mismatch,
          "generator: input " + nn::to_string(s) + " needs " + std::to_string(cfg_.in_channels) + " channels");
  require(s[2] % 4 == 0 && s[3] % 4 == 0 && s[2] >= 8 && s[3] >= 8, ErrorCategory::shape_mismatch,
          "generator: spatial extents of " + nn::to_string(s) + " must be multiples of 4 and >= 8");
  nn::Var<T> h = input;
  for (const auto& layer : encoder_) h = nn::relu(this->apply(tape, layer, h, mode));
  for (std::size_t i = 0; i < blocks_.size(); i += 2) {
    auto r = nn::relu(this->apply(tape, blocks_[i], h, mode));
    r = this->apply(tape, blocks_[i + 1], r, mode);
    h = nn::add(h, r);
  }
  for (const auto& layer : decoder_) h = nn::relu(this->apply(tape, layer, h, mode));
  if (cfg_.input_skip) h = nn::relu(this->apply(tape, fuse_, nn::concat_channels<T>({h, input}), mode));
  h = this->apply(tape, head_, h, mode);
  if (cfg_.output_skip != OutputSkip::none) {
    const auto& x = input.value();
    const std::size_t plane = s[2] * s[3];
    const std::size_t summed = cfg_.output_skip == OutputSkip::clean ? 1 : s[1];
    nn::Tensor<T> base({s[0], 1, s[2], s[3]});
    constexpr double limit = 1.0 - 1e-4;
    for (std::size_t n = 0; n < s[0]; ++n)
      for (std::size_t i = 0; i < plane; ++i) {
        double v = 0.0;
        for (std::size_t c = 0; c < summed; ++c) v += static_cast<double>(x[(n * s[1] + c) * plane + i]);
        base[n * plane + i] = static_cast<T>(std::atanh(std::clamp(v, -limit, limit)));
      }
    h = nn::add(h, tape.constant(std::move(base)));
  }
  return nn::tanh(h);
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require(cfg.depth >= 1 && cfg.base_width >= 1, ErrorCategory::invalid_argument,
          "discriminator: depth and width must be >= 1");
  require(std::isfinite(cfg.residual_gain) && cfg.residual_gain > 0.0, ErrorCategory::invalid_argument,
          "discriminator: residual gain must be positive");
  std::mt19937_64 rng(seed);
  std::size_t in = 1, width = cfg.base_width;
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    // The first layer always sees raw intensities.
    const bool norm = cfg.instance_norm && i > 0;
    layers_.push_back(this->add_conv("conv" + std::to_string(i), in, width, 4, 2, 1, 0, false, norm, rng));
    in = width;
    width *= 2;
  }
  layers_.push_back(this->add_conv("out", in, 1, 4, 1, 1, 0, false, false, rng));
}

template <typename T>
nn::Var<T> Discriminator<T>::forward(nn::Tape<T>& tape, nn::Var<T> input, ParamMode mode) {
  const auto& s = input.shape();
  const std::size_t min_extent = std::size_t{1} << (cfg_.depth + 1);
  require(s.size() == 4 && s[1] == 1 && s[2] >= min_extent && s[3] >= min_extent, ErrorCategory::shape_mismatch,
          "discriminator: input " + nn::to_string(s) + " must be [N, 1, H, W] with H, W >= " +
              std::to_string(min_extent));
  nn::Var<T> h = input;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = nn::leaky_relu(this->apply(tape, layers_[i], h, mode), 0.2);
  return nn::sigmoid(this->apply(tape, layers_.back(), h, mode));
}

template class detail::Network<float>;
template class detail::Network<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace ldct::negan
