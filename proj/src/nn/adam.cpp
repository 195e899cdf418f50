#include "ldct/nn/adam.hpp"

#include <cmath>

#include "ldct/error.hpp"

namespace ldct::nn {

template <typename T>
AdamState<T> AdamState<T>::for_params(const ModelParams<T>& params, double lr, double beta1,
                                      double beta2, double eps) {
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorCategory::invalid_argument,
          "Adam betas must lie in (0, 1)");
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state) {
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorCategory::state, "Adam state does not match the parameter set");
  for (const auto& p : params) {
    require(p.has_grad(), ErrorCategory::state, "adam_step: parameter '" + p.name + "' has no gradient");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    require(m.shape() == p.value.shape() && v.shape() == p.value.shape(), ErrorCategory::state,
            "Adam moments for '" + p.name + "' have the wrong shape");
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const T g = p.grad[k];
      m[k] = b1 * m[k] + (T{1} - b1) * g;
      v[k] = b2 * v[k] + (T{1} - b2) * g * g;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
    p.zero_grad();
  }
}

double lr_schedule(int epoch, const LrSchedule& cfg) {
  require(epoch >= 0, ErrorCategory::invalid_argument, "epoch must be >= 0");
  if (epoch < cfg.flat_epochs) return cfg.base_lr;
  if (cfg.decay_epochs <= 0) return 0.0;
  const double frac = static_cast<double>(epoch - cfg.flat_epochs) / cfg.decay_epochs;
  return frac >= 1.0 ? 0.0 : cfg.base_lr * (1.0 - frac);
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(ModelParams<float>&, AdamState<float>&);
template void adam_step<double>(ModelParams<double>&, AdamState<double>&);

}  // namespace ldct::nn
