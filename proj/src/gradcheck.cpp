#include "rdae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rdae/layers.hpp"
#include "rdae/rng.hpp"

namespace rdae {
namespace {

using T = double;
using Objective = std::function<double()>;

TensorD random_tensor(CounterRng& rng, Shape shape, double lo = -1, double hi = 1) {
  TensorD t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero by `gap`.
TensorD away_from_zero(CounterRng& rng, Shape shape, double gap) {
  TensorD t(std::move(shape));
  for (auto& v : t.data()) {
    const double mag = rng.uniform(gap, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Every 2x2 window holds distinct values separated by at least `gap`.
TensorD pool_input(CounterRng& rng, Shape shape, double gap) {
  TensorD t(shape);
  const std::size_t h = shape[0], w = shape[1], c = shape[2];
  for (std::size_t y = 0; y < h; y += 2) {
    for (std::size_t x = 0; x < w; x += 2) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double vals[4] = {0, 1, 2, 3};
        for (std::size_t i = 4; i > 1; --i) std::swap(vals[i - 1], vals[rng.below(i)]);
        const double base = rng.uniform(-1, 1);
        t.at(y, x, ch) = base + gap * vals[0] + rng.uniform(0, gap / 4);
        t.at(y, x + 1, ch) = base + gap * vals[1] + rng.uniform(0, gap / 4);
        t.at(y + 1, x, ch) = base + gap * vals[2] + rng.uniform(0, gap / 4);
        t.at(y + 1, x + 1, ch) = base + gap * vals[3] + rng.uniform(0, gap / 4);
      }
    }
  }
  return t;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Compares `analytic` with central differences of `objective` in `wrt`.
void compare(TensorD& wrt, const TensorD& analytic, const Objective& objective, double step,
             LayerGradcheck& out) {
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const double saved = wrt[i];
    wrt[i] = saved + step;
    const double plus = objective();
    wrt[i] = saved - step;
    const double minus = objective();
    wrt[i] = saved;
    const double numeric = (plus - minus) / (2 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++out.entries;
  }
}

void check_conv(CounterRng& rng, std::size_t stride, Padding padding, double step,
                LayerGradcheck& out) {
  const std::size_t h = 5 + rng.below(3);
  const std::size_t w = 5 + rng.below(3);
  const std::size_t c = 1 + rng.below(3);
  const std::size_t f = 1 + rng.below(4);
  const std::size_t k = (padding == Padding::kSame) ? 3 : 2 + rng.below(2);
  TensorD input = random_tensor(rng, Shape{h, w, c});
  TensorD kernels = random_tensor(rng, Shape{k, k, c, f});
  TensorD bias = random_tensor(rng, Shape{f});
  const TensorD probe0 = conv2d_forward(input, kernels, bias, stride, padding);
  const TensorD probe = random_tensor(rng, probe0.shape());
  const auto g = conv2d_backward(input, kernels, stride, padding, probe);
  const Objective obj = [&] { return dot(conv2d_forward(input, kernels, bias, stride, padding), probe); };
  compare(input, g.input, obj, step, out);
  compare(kernels, g.kernels, obj, step, out);
  compare(bias, g.bias, obj, step, out);
}

}  // namespace

std::vector<LayerGradcheck> run_gradcheck(std::uint64_t seed, std::size_t instances,
                                          double step) {
  std::vector<LayerGradcheck> results;
  auto run = [&](const std::string& name, std::uint64_t tag,
                 const std::function<void(CounterRng&, LayerGradcheck&)>& body) {
    LayerGradcheck r;
    r.layer = name;
    for (std::size_t i = 0; i < instances; ++i) {
      CounterRng rng(CounterRng::derive(seed, tag, i));
      body(rng, r);
      ++r.instances;
    }
    results.push_back(r);
  };

  run("conv2d same stride 1", 1, [&](CounterRng& rng, LayerGradcheck& r) {
    check_conv(rng, 1, Padding::kSame, step, r);
  });
  run("conv2d same stride 2", 2, [&](CounterRng& rng, LayerGradcheck& r) {
    check_conv(rng, 2, Padding::kSame, step, r);
  });
  run("conv2d valid", 3, [&](CounterRng& rng, LayerGradcheck& r) {
    check_conv(rng, 1, Padding::kValid, step, r);
  });
  run("maxpool2x2", 4, [&](CounterRng& rng, LayerGradcheck& r) {
    const std::size_t h = 2 * (1 + rng.below(4)), w = 2 * (1 + rng.below(4));
    TensorD input = pool_input(rng, Shape{h, w, 1 + rng.below(3)}, 1e-3);
    const auto pooled = maxpool2x2_forward(input);
    const TensorD probe = random_tensor(rng, pooled.output.shape());
    const TensorD g = maxpool2x2_backward(pooled, probe);
    compare(input, g, [&] { return dot(maxpool2x2_forward(input).output, probe); }, step, r);
  });
  run("upsample2x2", 5, [&](CounterRng& rng, LayerGradcheck& r) {
    TensorD input = random_tensor(rng, Shape{1 + rng.below(4), 1 + rng.below(4), 1 + rng.below(3)});
    const TensorD probe = random_tensor(rng, upsample2x2_forward(input).shape());
    const TensorD g = upsample2x2_backward(probe);
    compare(input, g, [&] { return dot(upsample2x2_forward(input), probe); }, step, r);
  });
  run("dense channels", 6, [&](CounterRng& rng, LayerGradcheck& r) {
    const std::size_t c = 1 + rng.below(4), d = 1 + rng.below(4);
    TensorD input = random_tensor(rng, Shape{4, 4, c});
    TensorD weights = random_tensor(rng, Shape{c, d});
    TensorD bias = random_tensor(rng, Shape{d});
    const TensorD probe = random_tensor(rng, Shape{4, 4, d});
    const auto g = dense_channels_backward(input, weights, probe);
    const Objective obj = [&] { return dot(dense_channels_forward(input, weights, bias), probe); };
    compare(input, g.input, obj, step, r);
    compare(weights, g.weights, obj, step, r);
    compare(bias, g.bias, obj, step, r);
  });
  run("relu", 7, [&](CounterRng& rng, LayerGradcheck& r) {
    TensorD input = away_from_zero(rng, Shape{4, 4, 1 + rng.below(3)}, 1e-3);
    const TensorD probe = random_tensor(rng, input.shape());
    const TensorD g = relu_backward(relu_forward(input), probe);
    compare(input, g, [&] { return dot(relu_forward(input), probe); }, step, r);
  });
  run("sigmoid", 8, [&](CounterRng& rng, LayerGradcheck& r) {
    TensorD input = random_tensor(rng, Shape{4, 4, 1 + rng.below(3)}, -6, 6);
    const TensorD probe = random_tensor(rng, input.shape());
    const TensorD g = sigmoid_backward(sigmoid_forward(input), probe);
    compare(input, g, [&] { return dot(sigmoid_forward(input), probe); }, step, r);
  });
  run("mse loss", 9, [&](CounterRng& rng, LayerGradcheck& r) {
    TensorD pred = random_tensor(rng, Shape{3, 3, 1 + rng.below(3)});
    const TensorD target = random_tensor(rng, pred.shape());
    const TensorD g = mse_loss(pred, target).grad;
    compare(pred, g, [&] { return mse_loss(pred, target).loss; }, step, r);
  });
  return results;
}

}  // namespace rdae
