#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ldct/nn/ops.hpp"
#include "ldct/nn/params.hpp"

namespace ldct::negan {

/// Encoder-decoder generator: 7x7 conv, two stride-2 downsampling convs,
/// residual blocks, two stride-2 transposed convs, 7x7 output conv, tanh.
/// Instance norm and ReLU follow every hidden conv; reflection padding keeps
/// the full-resolution convs edge-consistent.
///
/// `input_skip` adds a full-resolution fusion conv over the decoder features
/// concatenated with the raw input channels. `output_skip` picks what is
/// added, through atanh, before the final tanh: nothing, the first input
/// channel, or the sum of all input channels. With a zero head the network
/// then reproduces that signal.
enum class OutputSkip { none, clean, entangled };

std::string_view to_string(OutputSkip skip);
OutputSkip output_skip_from_string(std::string_view text);

struct GeneratorConfig {
  std::size_t in_channels = 2;
  std::size_t base_width = 16;
  std::size_t residual_blocks = 2;
  bool input_skip = true;
  OutputSkip output_skip = OutputSkip::entangled;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// What a discriminator judges: the image itself, or its difference from
/// the clean image x0 times `residual_gain`, which isolates the noise.
enum class CriticInput { image, residual };

std::string_view to_string(CriticInput input);
CriticInput critic_input_from_string(std::string_view text);

/// Patch discriminator: `depth` stride-2 4x4 convs with LeakyReLU(0.2),
/// widths doubling from base_width (optionally instance-normalised after the
/// first), then a stride-1 4x4 conv to one channel and a sigmoid. Instance
/// norm makes the critic nearly blind to a global scale of its input, so it
/// cannot judge noise amplitude in residual mode.
struct DiscriminatorConfig {
  std::size_t base_width = 16;
  std::size_t depth = 3;
  CriticInput input = CriticInput::residual;
  double residual_gain = 20.0;
  bool instance_norm = false;

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// How parameters enter a tape: as differentiable parameters, or as
/// constants (inference, or a frozen network inside another network's step).
enum class ParamMode { trainable, frozen };

namespace detail {

struct ConvLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;          // zero padding applied by the conv itself
  std::size_t reflect_pad = 0;  // reflection padding applied before it
  bool transposed = false;
  bool has_norm = false;
  std::size_t norm_scale = 0;
  std::size_t norm_shift = 0;
};

template <typename T>
class Network {
 public:
  nn::ModelParams<T>& params() noexcept { return params_; }
  const nn::ModelParams<T>& params() const noexcept { return params_; }

 protected:
  ConvLayer add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                     std::size_t stride, std::size_t pad, std::size_t reflect, bool transposed, bool norm,
                     std::mt19937_64& rng);
  nn::Var<T> apply(nn::Tape<T>& tape, const ConvLayer& layer, nn::Var<T> x, ParamMode mode);
  nn::Var<T> use(nn::Tape<T>& tape, std::size_t index, ParamMode mode);

  nn::ModelParams<T> params_;
};

}  // namespace detail

template <typename T>
class Generator : public detail::Network<T> {
 public:
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);

  const GeneratorConfig& config() const noexcept { return cfg_; }
  /// input [N, in_channels, H, W] in [-1, 1]; H and W divisible by 4.
  /// Returns [N, 1, H, W].
  nn::Var<T> forward(nn::Tape<T>& tape, nn::Var<T> input, ParamMode mode = ParamMode::trainable);

 private:
  GeneratorConfig cfg_;
  std::vector<detail::ConvLayer> encoder_;
  std::vector<detail::ConvLayer> blocks_;  // two convs per residual block
  std::vector<detail::ConvLayer> decoder_;
  detail::ConvLayer fuse_;
  detail::ConvLayer head_;
};

template <typename T>
class Discriminator : public detail::Network<T> {
 public:
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const noexcept { return cfg_; }
  /// input [N, 1, H, W]; returns per-patch probabilities [N, 1, h, w].
  nn::Var<T> forward(nn::Tape<T>& tape, nn::Var<T> input, ParamMode mode = ParamMode::trainable);

 private:
  DiscriminatorConfig cfg_;
  std::vector<detail::ConvLayer> layers_;
};

extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace ldct::negan
