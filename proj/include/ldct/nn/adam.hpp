#pragma once

#include <cstdint>
#include <vector>

#include "ldct/nn/params.hpp"

namespace ldct::nn {

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t t = 0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero moments shaped like `params`.
  static AdamState for_params(const ModelParams<T>& params, double lr = 2e-4, double beta1 = 0.5,
                              double beta2 = 0.999, double eps = 1e-8);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update; clears every gradient afterwards. Throws
/// if a parameter has no gradient or the moments do not mirror `params`.
template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state);

struct LrSchedule {
  double base_lr = 2e-4;
  int flat_epochs = 200;
  int decay_epochs = 200;
};

/// Constant for the flat phase, then linear decay reaching exactly 0 at
/// flat_epochs + decay_epochs (and 0 beyond).
double lr_schedule(int epoch, const LrSchedule& cfg);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace ldct::nn
