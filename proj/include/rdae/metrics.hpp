#pragma once

#include <array>
#include <vector>

#include "rdae/tensor.hpp"

namespace rdae {

struct SsimConfig {
  int window = 11;  // Gaussian window side
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  std::array<double, 5> ms_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

struct CssimConfig {
  double k = 45.0;  // Cr = 1 - deltaE / k
};

// Per-window comparison maps over the valid window positions
// ((H - window + 1) x (W - window + 1), row-major).
struct SsimMaps {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> luminance;
  std::vector<double> contrast;
  std::vector<double> structure;
  double mean = 0;  // mean of l * C * S
};

struct MetricReport {
  double psnr_db = 0;
  double ssim = 0;
  double ms_ssim = 0;
  double c_ssim = 0;
  double luminance = 0;  // mean l
  double contrast = 0;   // mean C
  double structure = 0;  // mean S
  double color = 0;      // mean Cr
};

// 10 log10(peak^2 / MSE) over all channels; +infinity when MSE is zero.
double psnr(const Tensor& x, const Tensor& y, double peak = 1.0);

// Rec.601 luma (0.299, 0.587, 0.114) of an HxWx3 image as HxWx1. Single
// channel input is returned unchanged.
Tensor to_luma(const Tensor& image);

// Windowed SSIM with C1 = (K1 L)^2, C2 = (K2 L)^2, C3 = C2 / 2. Colour inputs
// are reduced to luma first.
SsimMaps ssim(const Tensor& x, const Tensor& y, const SsimConfig& cfg = {});

// Multi-scale SSIM over as many dyadic scales (up to five) as still fit the
// window; the scale weights in use are renormalized to sum to one. Finer
// scales contribute mean(C * S), the coarsest the full mean SSIM. Terms are
// floored at zero before exponentiation.
double ms_ssim(const Tensor& x, const Tensor& y, const SsimConfig& cfg = {});

// Number of dyadic scales ms_ssim uses for an image of the given size.
int ms_ssim_scales(std::size_t height, std::size_t width, const SsimConfig& cfg = {});

struct CssimResult {
  double value = 0;
  double color_mean = 0;  // mean Cr
  SsimMaps maps;
};

// Colour SSIM: l * C * S from luma SSIM times Cr = max(0, 1 - dE / k), with
// dE the CIE76 difference averaged over the same Gaussian window.
CssimResult c_ssim(const Tensor& x, const Tensor& y, const SsimConfig& ssim_cfg = {},
                   const CssimConfig& cssim_cfg = {});

MetricReport assess(const Tensor& reference, const Tensor& distorted,
                    const SsimConfig& ssim_cfg = {}, const CssimConfig& cssim_cfg = {});

}  // namespace rdae
