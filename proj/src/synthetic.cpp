#include "rdae/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rdae/image_io.hpp"
#include "rdae/model.hpp"
#include "rdae/rng.hpp"

namespace rdae {
namespace {

constexpr std::uint64_t kSyntheticTag = 0xce11;
constexpr double kPi = 3.14159265358979323846;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

struct Blob {
  double y, x, radius, strength;
};

}  // namespace

Tensor synthetic_cell(std::uint64_t seed, std::size_t index, CellClass label,
                      std::size_t height, std::size_t width) {
  CounterRng rng(CounterRng::derive(seed, kSyntheticTag, index));
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);

  const double cy = h * rng.uniform(0.45, 0.55);
  const double cx = w * rng.uniform(0.45, 0.55);
  const double ry = h * rng.uniform(0.30, 0.42);
  const double rx = w * rng.uniform(0.30, 0.42);
  const double tilt = rng.uniform(0, kPi);
  const double ct = std::cos(tilt);
  const double st = std::sin(tilt);

  const double cell[3] = {rng.uniform(0.78, 0.92), rng.uniform(0.45, 0.62),
                          rng.uniform(0.50, 0.66)};
  const double bg = rng.uniform(0.0, 0.05);
  const double shade_amp = rng.uniform(0.03, 0.08);
  const double tex_amp = rng.uniform(0.01, 0.03);
  const double fy = rng.uniform(1.0, 3.0) * 2 * kPi / h;
  const double fx = rng.uniform(1.0, 3.0) * 2 * kPi / w;
  const double phase = rng.uniform(0, 2 * kPi);

  std::vector<Blob> blobs;
  if (label == CellClass::kParasitized) {
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0, 2 * kPi);
      const double r = rng.uniform(0.0, 0.6);
      blobs.push_back({cy + r * ry * std::sin(a), cx + r * rx * std::cos(a),
                       std::min(h, w) * rng.uniform(0.03, 0.07), rng.uniform(0.7, 1.0)});
    }
  }
  const double stain[3] = {0.42, 0.16, 0.52};

  Tensor img(Shape{height, width, 3});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dy = y + 0.5 - cy;
      const double dx = x + 0.5 - cx;
      const double u = (dx * ct + dy * st) / rx;
      const double v = (-dx * st + dy * ct) / ry;
      const double rho = std::sqrt(u * u + v * v);
      const double inside = 1.0 - smoothstep(0.95, 1.05, rho);
      const double shade = 1.0 - shade_amp * (1.0 - rho * rho) +
                           tex_amp * std::sin(fy * y + phase) * std::cos(fx * x);
      double stain_w = 0;
      for (const Blob& b : blobs) {
        const double d2 = ((y + 0.5 - b.y) * (y + 0.5 - b.y) + (x + 0.5 - b.x) * (x + 0.5 - b.x)) /
                          (b.radius * b.radius);
        stain_w = std::max(stain_w, b.strength * std::exp(-0.5 * d2));
      }
      for (int c = 0; c < 3; ++c) {
        const double tissue = cell[c] * shade * (1 - stain_w) + stain[c] * stain_w;
        img.at(y, x, c) = static_cast<float>(std::clamp(bg + inside * (tissue - bg), 0.0, 1.0));
      }
    }
  }
  return img;
}

void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count,
                             std::uint64_t seed, bool fixed_size) {
  namespace fs = std::filesystem;
  const fs::path dirs[2] = {root / "Parasitized", root / "Uninfected"};
  for (const auto& d : dirs) fs::create_directories(d);
  CounterRng sizes(CounterRng::derive(seed, kSyntheticTag, 0xffff'ffffULL));
  for (std::size_t i = 0; i < count; ++i) {
    const CellClass label = (i % 2 == 0) ? CellClass::kParasitized : CellClass::kUninfected;
    std::size_t h = kImageSize;
    std::size_t w = kImageSize;
    if (!fixed_size) {
      h = 100 + sizes.below(61);
      w = 100 + sizes.below(61);
    }
    char name[32];
    std::snprintf(name, sizeof name, "cell_%05zu.png", i);
    write_png((dirs[i % 2] / name).string(), synthetic_cell(seed, i, label, h, w));
  }
}

std::vector<Tensor> synthetic_images(std::size_t count, std::uint64_t seed) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const CellClass label = (i % 2 == 0) ? CellClass::kParasitized : CellClass::kUninfected;
    out.push_back(synthetic_cell(seed, i, label, kImageSize, kImageSize));
  }
  return out;
}

}  // namespace rdae
