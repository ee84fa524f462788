#include "rdae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rdae/color.hpp"

namespace rdae {
namespace {

struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> v;
};

Plane luma_plane(const Tensor& image) {
  require_hwc(image.shape(), "luma");
  Plane p{image.height(), image.width(), std::vector<double>(image.height() * image.width())};
  if (image.channels() == 1) {
    for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = image[i];
  } else if (image.channels() == 3) {
    for (std::size_t i = 0; i < p.v.size(); ++i) {
      const float* px = image.raw() + 3 * i;
      p.v[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  } else {
    throw Error(Errc::kShape, "luma needs 1 or 3 channels, got " + image.shape().str());
  }
  return p;
}

std::vector<double> gaussian_taps(const SsimConfig& cfg) {
  std::vector<double> taps(static_cast<std::size_t>(cfg.window));
  const double centre = (cfg.window - 1) / 2.0;
  for (int i = 0; i < cfg.window; ++i) {
    const double d = i - centre;
    taps[i] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian filter keeping only fully covered window positions.
Plane filter_valid(const Plane& in, const std::vector<double>& taps) {
  const std::size_t n = taps.size();
  const std::size_t oh = in.height - n + 1;
  const std::size_t ow = in.width - n + 1;
  std::vector<double> rows(in.height * ow);
  for (std::size_t y = 0; y < in.height; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < n; ++t) s += taps[t] * in.v[y * in.width + x + t];
      rows[y * ow + x] = s;
    }
  Plane out{oh, ow, std::vector<double>(oh * ow)};
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < n; ++t) s += taps[t] * rows[(y + t) * ow + x];
      out.v[y * ow + x] = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane p{a.height, a.width, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) p.v[i] = a.v[i] * b.v[i];
  return p;
}

SsimMaps ssim_planes(const Plane& x, const Plane& y, const SsimConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.window);
  if (x.height < w || x.width < w) {
    throw Error(Errc::kShape, "ssim: image " + std::to_string(x.height) + "x" +
                                  std::to_string(x.width) + " is smaller than the " +
                                  std::to_string(cfg.window) + "x" + std::to_string(cfg.window) +
                                  " window");
  }
  const std::vector<double> taps = gaussian_taps(cfg);
  const Plane mx = filter_valid(x, taps);
  const Plane my = filter_valid(y, taps);
  const Plane xx = filter_valid(product(x, x), taps);
  const Plane yy = filter_valid(product(y, y), taps);
  const Plane xy = filter_valid(product(x, y), taps);
  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const double c3 = c2 / 2.0;

  SsimMaps m;
  m.height = mx.height;
  m.width = mx.width;
  const std::size_t n = mx.v.size();
  m.luminance.resize(n);
  m.contrast.resize(n);
  m.structure.resize(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = mx.v[i];
    const double uy = my.v[i];
    const double vx = std::max(xx.v[i] - ux * ux, 0.0);
    const double vy = std::max(yy.v[i] - uy * uy, 0.0);
    const double cov = xy.v[i] - ux * uy;
    const double sx = std::sqrt(vx);
    const double sy = std::sqrt(vy);
    m.luminance[i] = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
    m.contrast[i] = (2.0 * sx * sy + c2) / (vx + vy + c2);
    m.structure[i] = (cov + c3) / (sx * sy + c3);
    total += m.luminance[i] * m.contrast[i] * m.structure[i];
  }
  m.mean = total / static_cast<double>(n);
  return m;
}

Plane downsample2(const Plane& p) {
  Plane out{p.height / 2, p.width / 2, {}};
  out.v.resize(out.height * out.width);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) {
      const std::size_t i = (2 * y) * p.width + 2 * x;
      out.v[y * out.width + x] = 0.25 * (p.v[i] + p.v[i + 1] + p.v[i + p.width] + p.v[i + p.width + 1]);
    }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double psnr(const Tensor& x, const Tensor& y, double peak) {
  require_same_shape(x.shape(), y.shape(), "psnr");
  if (x.empty()) throw Error(Errc::kShape, "psnr of empty images");
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

Tensor to_luma(const Tensor& image) {
  const Plane p = luma_plane(image);
  Tensor out(Shape{p.height, p.width, 1});
  for (std::size_t i = 0; i < p.v.size(); ++i) out[i] = static_cast<float>(p.v[i]);
  return out;
}

SsimMaps ssim(const Tensor& x, const Tensor& y, const SsimConfig& cfg) {
  require_same_shape(x.shape(), y.shape(), "ssim");
  return ssim_planes(luma_plane(x), luma_plane(y), cfg);
}

int ms_ssim_scales(std::size_t height, std::size_t width, const SsimConfig& cfg) {
  int scales = 0;
  std::size_t h = height;
  std::size_t w = width;
  while (scales < static_cast<int>(cfg.ms_weights.size()) &&
         h >= static_cast<std::size_t>(cfg.window) && w >= static_cast<std::size_t>(cfg.window)) {
    ++scales;
    h /= 2;
    w /= 2;
  }
  return scales;
}

double ms_ssim(const Tensor& x, const Tensor& y, const SsimConfig& cfg) {
  require_same_shape(x.shape(), y.shape(), "ms_ssim");
  const int scales = ms_ssim_scales(x.height(), x.width(), cfg);
  if (scales < 2) {
    throw Error(Errc::kShape, "ms_ssim: image " + x.shape().str() +
                                  " supports fewer than two scales");
  }
  double weight_sum = 0;
  for (int j = 0; j < scales; ++j) weight_sum += cfg.ms_weights[j];

  Plane px = luma_plane(x);
  Plane py = luma_plane(y);
  double result = 1.0;
  for (int j = 0; j < scales; ++j) {
    const SsimMaps m = ssim_planes(px, py, cfg);
    const double weight = cfg.ms_weights[j] / weight_sum;
    if (j == scales - 1) {
      result *= std::pow(std::max(m.mean, 0.0), weight);
      break;
    }
    double cs = 0;
    for (std::size_t i = 0; i < m.contrast.size(); ++i) cs += m.contrast[i] * m.structure[i];
    cs /= static_cast<double>(m.contrast.size());
    result *= std::pow(std::max(cs, 0.0), weight);
    px = downsample2(px);
    py = downsample2(py);
  }
  return result;
}

CssimResult c_ssim(const Tensor& x, const Tensor& y, const SsimConfig& ssim_cfg,
                   const CssimConfig& cssim_cfg) {
  require_same_shape(x.shape(), y.shape(), "c_ssim");
  if (!(cssim_cfg.k > 0)) throw Error(Errc::kInvalidArg, "c_ssim: k must be positive");
  if (x.shape().rank() != 3 || x.channels() != 3) {
    throw Error(Errc::kShape, "c_ssim needs colour images, got " + x.shape().str());
  }
  CssimResult r;
  r.maps = ssim(x, y, ssim_cfg);

  const std::vector<LabPixel> lx = to_lab(x);
  const std::vector<LabPixel> ly = to_lab(y);
  Plane de{x.height(), x.width(), std::vector<double>(lx.size())};
  for (std::size_t i = 0; i < lx.size(); ++i) de.v[i] = delta_e(lx[i], ly[i]);
  const Plane de_window = filter_valid(de, gaussian_taps(ssim_cfg));

  double total = 0;
  double color = 0;
  const std::size_t n = de_window.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double cr = std::max(0.0, 1.0 - de_window.v[i] / cssim_cfg.k);
    color += cr;
    total += r.maps.luminance[i] * r.maps.contrast[i] * r.maps.structure[i] * cr;
  }
  r.value = total / static_cast<double>(n);
  r.color_mean = color / static_cast<double>(n);
  return r;
}

MetricReport assess(const Tensor& reference, const Tensor& distorted, const SsimConfig& ssim_cfg,
                    const CssimConfig& cssim_cfg) {
  MetricReport rep;
  rep.psnr_db = psnr(reference, distorted, ssim_cfg.dynamic_range);
  const CssimResult c = c_ssim(reference, distorted, ssim_cfg, cssim_cfg);
  rep.ssim = c.maps.mean;
  rep.c_ssim = c.value;
  rep.color = c.color_mean;
  rep.luminance = mean_of(c.maps.luminance);
  rep.contrast = mean_of(c.maps.contrast);
  rep.structure = mean_of(c.maps.structure);
  rep.ms_ssim = ms_ssim(reference, distorted, ssim_cfg);
  return rep;
}

}  // namespace rdae
