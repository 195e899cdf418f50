#pragma once

#include <span>
#include <vector>

namespace ldct::negan {

enum class DoseParameter {
  tube_current,  // larger is cleaner: k_j = level_0 / level_j
  noise_index,   // larger is noisier: k_j = level_j / level_0
};

/// Noise factors of the lower-dose levels relative to the first (HDCT)
/// entry, optionally rounded to one decimal. A single level gives no factors.
std::vector<double> set_noise_factors(std::span<const double> levels, DoseParameter kind,
                                      bool round_to_tenth = false);

}  // namespace ldct::negan
