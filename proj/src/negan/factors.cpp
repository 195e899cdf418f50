#include "ldct/negan/factors.hpp"

#include <cmath>
#include <string>

#include "ldct/error.hpp"

namespace ldct::negan {

std::vector<double> set_noise_factors(std::span<const double> levels, DoseParameter kind, bool round_to_tenth) {
  require(!levels.empty(), ErrorCategory::invalid_argument, "set_noise_factors: no dose levels");
  for (std::size_t i = 0; i < levels.size(); ++i)
    require(std::isfinite(levels[i]) && levels[i] > 0.0, ErrorCategory::invalid_argument,
            "set_noise_factors: level " + std::to_string(i) + " must be positive");
  std::vector<double> k;
  for (std::size_t j = 1; j < levels.size(); ++j) {
    double f = kind == DoseParameter::tube_current ? levels[0] / levels[j] : levels[j] / levels[0];
    if (round_to_tenth) f = std::round(f * 10.0) / 10.0;
    k.push_back(f);
  }
  return k;
}

}  // namespace ldct::negan
