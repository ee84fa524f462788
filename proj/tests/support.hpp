#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <algorithm>

#include "rdae/rng.hpp"
#include "rdae/tensor.hpp"

namespace testing {

template <typename T>
rdae::BasicTensor<T> random_tensor(rdae::CounterRng& rng, rdae::Shape shape, double lo = -1,
                                   double hi = 1) {
  rdae::BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline double dot(const rdae::TensorD& a, const rdae::TensorD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Max relative error of `analytic` against central differences of
// `objective` with respect to `wrt`, checking every `stride`-th entry.
inline double fd_max_rel_error(rdae::TensorD& wrt, const rdae::TensorD& analytic,
                               const std::function<double()>& objective, double h = 1e-5,
                               std::size_t stride = 1) {
  double worst = 0;
  for (std::size_t i = 0; i < wrt.size(); i += stride) {
    const double saved = wrt[i];
    wrt[i] = saved + h;
    const double plus = objective();
    wrt[i] = saved - h;
    const double minus = objective();
    wrt[i] = saved;
    const double numeric = (plus - minus) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

template <typename T>
double max_abs_diff(const rdae::BasicTensor<T>& a, const rdae::BasicTensor<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rdae_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

// Smooth deterministic 128x128x3 test pattern shared with the external
// reference computations in the metric tests.
inline rdae::Tensor pattern_a() {
  rdae::Tensor t(rdae::Shape{128, 128, 3});
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t.at(y, x, c) = static_cast<float>(0.5 + 0.35 * std::sin(0.13 * x + 0.29 * y + 1.1 * c) *
                                                     std::cos(0.07 * x - 0.05 * y));
  return t;
}

inline rdae::Tensor pattern_b() {
  rdae::Tensor a = pattern_a();
  rdae::Tensor t(a.shape());
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = static_cast<double>(a.at(y, x, c)) + 0.08 * std::sin(0.9 * x + 0.4 * y + c);
        t.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return t;
}

}  // namespace testing
