#include "ldct/negan/losses.hpp"

#include "ldct/error.hpp"

namespace ldct::negan {

template <typename T>
nn::Var<T> critic_view(const Discriminator<T>& disc, nn::Var<T> x, nn::Var<T> x0) {
  if (disc.config().input == CriticInput::image) return x;
  require(x.shape() == x0.shape(), ErrorCategory::shape_mismatch,
          "critic: image " + nn::to_string(x.shape()) + " vs clean " + nn::to_string(x0.shape()));
  return nn::scale(nn::sub(x, x0), disc.config().residual_gain);
}

template <typename T>
nn::Var<T> discriminator_loss(nn::Tape<T>& tape, Discriminator<T>& disc, nn::Var<T> real, nn::Var<T> fake,
                              nn::Var<T> x0) {
  require(!real.value().empty() && real.shape()[0] > 0, ErrorCategory::invalid_argument,
          "discriminator_loss: empty batch");
  require(real.shape() == fake.shape(), ErrorCategory::shape_mismatch,
          "discriminator_loss: real " + nn::to_string(real.shape()) + " vs fake " + nn::to_string(fake.shape()));
  auto on_real = nn::binary_cross_entropy(disc.forward(tape, critic_view(disc, real, x0)), 1.0);
  auto on_fake = nn::binary_cross_entropy(disc.forward(tape, critic_view(disc, nn::detach(fake), x0)), 0.0);
  return nn::add(on_real, on_fake);
}

template <typename T>
nn::Var<T> entangle(nn::Tape<T>& tape, nn::Var<T> x0, nn::Var<T> n0, double k) {
  require(k >= 0.0, ErrorCategory::invalid_argument, "noise factor must be >= 0");
  (void)tape;
  return nn::concat_channels<T>({x0, nn::scale(n0, k)});
}

template <typename T>
GeneratorLoss<T> generator_loss(nn::Tape<T>& tape, Generator<T>& gen, Discriminator<T>& disc, nn::Var<T> x0,
                                nn::Var<T> n0, double k, const LossWeights& weights) {
  require(!x0.value().empty(), ErrorCategory::invalid_argument, "generator_loss: empty batch");
  require(x0.shape() == n0.shape(), ErrorCategory::shape_mismatch,
          "generator_loss: x0 " + nn::to_string(x0.shape()) + " vs n0 " + nn::to_string(n0.shape()));
  GeneratorLoss<T> out;
  out.fake = gen.forward(tape, entangle(tape, x0, n0, k));
  auto p_fake = disc.forward(tape, critic_view(disc, out.fake, x0), ParamMode::frozen);
  nn::Var<T> adv = weights.form == AdversarialForm::non_saturating
                       ? nn::binary_cross_entropy(p_fake, 1.0)
                       : nn::scale(nn::binary_cross_entropy(p_fake, 0.0), -1.0);
  out.adversarial = static_cast<double>(adv.value()[0]);
  nn::Var<T> total = adv;
  // each mean-abs term is built only when weighted, so a zero weight leaves
  // the loss purely adversarial
  auto fid = nn::mean_abs_diff(x0, out.fake);
  out.fidelity = static_cast<double>(fid.value()[0]);
  if (weights.fidelity != 0.0) total = nn::add(total, nn::scale(fid, weights.fidelity));
  if (weights.reconstruction != 0.0) {
    auto zero = tape.constant(nn::Tensor<T>(n0.shape()));
    auto rec = nn::mean_abs_diff(x0, gen.forward(tape, entangle(tape, x0, zero, 0.0)));
    out.reconstruction = static_cast<double>(rec.value()[0]);
    total = nn::add(total, nn::scale(rec, weights.reconstruction));
  }
  out.total = total;
  return out;
}

#define LDCT_INSTANTIATE_LOSSES(T)                                                                       \
  template nn::Var<T> discriminator_loss(nn::Tape<T>&, Discriminator<T>&, nn::Var<T>, nn::Var<T>,       \
                                        nn::Var<T>);                                                     \
  template nn::Var<T> critic_view(const Discriminator<T>&, nn::Var<T>, nn::Var<T>);                      \
  template nn::Var<T> entangle(nn::Tape<T>&, nn::Var<T>, nn::Var<T>, double);                            \
  template GeneratorLoss<T> generator_loss(nn::Tape<T>&, Generator<T>&, Discriminator<T>&, nn::Var<T>, \
                                           nn::Var<T>, double, const LossWeights&);
LDCT_INSTANTIATE_LOSSES(float)
LDCT_INSTANTIATE_LOSSES(double)

}  // namespace ldct::negan
