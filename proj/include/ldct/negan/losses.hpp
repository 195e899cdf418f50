#pragma once

#include "ldct/negan/networks.hpp"

namespace ldct::negan {

/// Generator adversarial term: non-saturating -mean log D(fake), or the
/// minimax +mean log(1 - D(fake)).
enum class AdversarialForm { non_saturating, minimax };

struct LossWeights {
  double fidelity = 10.0;
  double reconstruction = 10.0;
  AdversarialForm form = AdversarialForm::non_saturating;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// -mean log D(real) - mean log(1 - D(fake)). `fake` is detached first, so
/// only the discriminator receives gradients. `x0` is the clean image that
/// residual critics subtract.
template <typename T>
nn::Var<T> discriminator_loss(nn::Tape<T>& tape, Discriminator<T>& disc, nn::Var<T> real, nn::Var<T> fake,
                              nn::Var<T> x0);

/// The tensor `disc` sees for image `x` of clean image `x0`.
template <typename T>
nn::Var<T> critic_view(const Discriminator<T>& disc, nn::Var<T> x, nn::Var<T> x0);

template <typename T>
struct GeneratorLoss {
  nn::Var<T> total;
  nn::Var<T> fake;  // G(x0, k n0)
  double adversarial = 0.0;
  double fidelity = 0.0;
  double reconstruction = 0.0;
};

/// Adversarial term against `disc` plus weighted mean |x0 - G(x0, k n0)| and
/// mean |x0 - G(x0, 0)|. `x0` and `n0` are [N, 1, H, W] in normalised units;
/// the discriminator is frozen, so gradients reach only the generator.
template <typename T>
GeneratorLoss<T> generator_loss(nn::Tape<T>& tape, Generator<T>& gen, Discriminator<T>& disc, nn::Var<T> x0,
                                nn::Var<T> n0, double k, const LossWeights& weights);

/// Two-channel generator input (x0, k n0).
template <typename T>
nn::Var<T> entangle(nn::Tape<T>& tape, nn::Var<T> x0, nn::Var<T> n0, double k);

}  // namespace ldct::negan
