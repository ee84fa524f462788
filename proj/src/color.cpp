#include "rdae/color.hpp"

#include <algorithm>
#include <cmath>

namespace rdae {
namespace {

double srgb_to_linear(double c) {
  c = std::clamp(c, 0.0, 1.0);
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhite[3] = {
    kM[0][0] + kM[0][1] + kM[0][2],
    kM[1][0] + kM[1][1] + kM[1][2],
    kM[2][0] + kM[2][1] + kM[2][2],
};

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

LabPixel srgb_to_lab(double r, double g, double b) {
  const double lin[3] = {srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b)};
  double t[3];
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double xyz = kM[i][0] * lin[0] + kM[i][1] * lin[1] + kM[i][2] * lin[2];
    t[i] = xyz / kWhite[i];
    f[i] = lab_f(t[i]);
  }
  // Linear branch of L* written as (29/3)^3 Y so black lands on exactly 0.
  constexpr double delta3 = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
  const double l = t[1] > delta3 ? 116.0 * f[1] - 16.0 : (24389.0 / 27.0) * t[1];
  return {l, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

double delta_e(const LabPixel& p, const LabPixel& q) {
  const double dl = p.l_star - q.l_star;
  const double da = p.a_star - q.a_star;
  const double db = p.b_star - q.b_star;
  return std::sqrt(dl * dl + da * da + db * db);
}

std::vector<LabPixel> to_lab(const Tensor& rgb) {
  require_hwc(rgb.shape(), "to_lab");
  if (rgb.channels() != 3) throw Error(Errc::kShape, "to_lab needs 3 channels, got " + rgb.shape().str());
  std::vector<LabPixel> out(rgb.height() * rgb.width());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const float* px = rgb.raw() + 3 * p;
    out[p] = srgb_to_lab(px[0], px[1], px[2]);
  }
  return out;
}

}  // namespace rdae
