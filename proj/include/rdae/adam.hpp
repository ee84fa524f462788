#pragma once

#include <cmath>
#include <cstdint>

#include "rdae/tensor.hpp"

namespace rdae {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws Errc::kInvalidArg when a field is outside its domain.
  void validate() const;
};

// A trainable tensor together with its gradient accumulator and Adam
// moment estimates. All four tensors share one shape.
template <typename T>
struct Param {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  BasicTensor<T> m;
  BasicTensor<T> v;
  std::uint64_t step_count = 0;

  Param() = default;
  explicit Param(BasicTensor<T> initial)
      : value(std::move(initial)),
        grad(value.shape()),
        m(value.shape()),
        v(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }
  void scale_grad(T factor) {
    for (auto& g : grad.data()) g *= factor;
  }
  void reset_optimizer() {
    m.fill(T{0});
    v.fill(T{0});
    step_count = 0;
  }
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   value <- value - lr * m_hat / (sqrt(v_hat) + eps)
// with m_hat = m / (1 - b1^t), v_hat = v / (1 - b2^t) and t the incremented
// step count. The gradient is left for the caller to clear.
template <typename T>
void adam_step(Param<T>& p, const AdamConfig& cfg) {
  ++p.step_count;
  const double t = static_cast<double>(p.step_count);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T m_corr = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T v_corr = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  T* value = p.value.raw();
  T* m = p.m.raw();
  T* v = p.v.raw();
  const T* g = p.grad.raw();
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * g[i];
    v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
    const T m_hat = m[i] / m_corr;
    const T v_hat = v[i] / v_corr;
    value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace rdae
