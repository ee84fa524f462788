#pragma once

#include <array>
#include <span>

#include "rdae/tensor.hpp"

namespace rdae {

// Channel-level ZCA whitening of RGB pixels. The full-image covariance is
// far too large to decompose, so each pixel's RGB vector is decorrelated
// with the 3x3 channel covariance of the fitting set:
//   W = E diag(1 / sqrt(lambda + eps)) E^T,   apply(x) = W (x - mean).
struct WhiteningTransform {
  std::array<double, 3> mean{};
  std::array<double, 9> matrix{};   // row-major W
  std::array<double, 9> inverse{};  // row-major W^-1 = E diag(sqrt(lambda + eps)) E^T
  double epsilon = 1e-5;

  Tensor apply(const Tensor& image) const;
  Tensor invert(const Tensor& whitened) const;

  friend bool operator==(const WhiteningTransform&, const WhiteningTransform&) = default;
};

struct WhiteningFit {
  WhiteningTransform transform;
  // Smallest covariance eigenvalue was negligible against the largest; the
  // epsilon floor kept the transform finite.
  bool degenerate = false;
};

WhiteningFit whitening_fit(std::span<const Tensor> images, double epsilon = 1e-5);

// 3x3 channel covariance (row-major) of a set of HxWx3 images.
std::array<double, 9> channel_covariance(std::span<const Tensor> images);

}  // namespace rdae
