#pragma once

#include <vector>

#include "rdae/tensor.hpp"

namespace rdae {

struct LabPixel {
  double l_star = 0;
  double a_star = 0;
  double b_star = 0;
};

// sRGB (components clamped to [0, 1]) -> linear RGB -> XYZ -> CIELAB under
// D65. The reference white is the XYZ image of sRGB white, so (1, 1, 1) maps
// to exactly (100, 0, 0).
LabPixel srgb_to_lab(double r, double g, double b);

// CIE76 colour difference: Euclidean distance in L*a*b*.
double delta_e(const LabPixel& p, const LabPixel& q);

// Per-pixel Lab conversion of an HxWx3 image, row-major.
std::vector<LabPixel> to_lab(const Tensor& rgb);

}  // namespace rdae
