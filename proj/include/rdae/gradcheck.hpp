#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rdae {

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckStep = 1e-5;

struct LayerGradcheck {
  std::string layer;
  std::size_t instances = 0;
  std::size_t entries = 0;  // gradient entries compared
  double max_rel_error = 0;
  bool passed() const { return max_rel_error < kGradcheckTolerance; }
};

// Central-difference check of every layer's backward pass in double
// precision on `instances` random problems per layer. The scalar objective is
// sum(out * w) for a random w, so the upstream gradient is w. Relative error
// per entry is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
// Relu and max-pool inputs are drawn away from their kinks and ties.
std::vector<LayerGradcheck> run_gradcheck(std::uint64_t seed, std::size_t instances = 20,
                                          double step = kGradcheckStep);

}  // namespace rdae
