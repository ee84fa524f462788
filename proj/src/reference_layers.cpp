#include "rdae/reference_layers.hpp"

namespace rdae::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride,
                              Padding padding) {
  const std::size_t k = kernels.shape()[0];
  const std::size_t c_in = kernels.shape()[2];
  const std::size_t c_out = kernels.shape()[3];
  if (input.channels() != c_in) {
    throw Error(Errc::kShape, "reference conv2d: " + input.shape().str() + " vs " +
                                  kernels.shape().str());
  }
  const ConvGeometry g = conv_geometry(input.height(), input.width(), k, stride, padding);
  BasicTensor<T> out(Shape{g.out_height, g.out_width, c_out});
  for (std::size_t oy = 0; oy < g.out_height; ++oy)
    for (std::size_t ox = 0; ox < g.out_width; ++ox)
      for (std::size_t f = 0; f < c_out; ++f) {
        T sum = bias[f];
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                            static_cast<std::ptrdiff_t>(g.pad_top);
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(input.height()) ||
                ix >= static_cast<std::ptrdiff_t>(input.width()))
              continue;
            for (std::size_t c = 0; c < c_in; ++c) {
              sum += input.at(iy, ix, c) * kernels[((ky * k + kx) * c_in + c) * c_out + f];
            }
          }
        out.at(oy, ox, f) = sum;
      }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& kernels, std::size_t stride,
                             Padding padding, const BasicTensor<T>& upstream) {
  const std::size_t k = kernels.shape()[0];
  const std::size_t c_in = kernels.shape()[2];
  const std::size_t c_out = kernels.shape()[3];
  const ConvGeometry g = conv_geometry(input.height(), input.width(), k, stride, padding);
  require_same_shape(upstream.shape(), Shape{g.out_height, g.out_width, c_out},
                     "reference conv2d backward");
  ConvGrads<T> r{BasicTensor<T>(input.shape()), BasicTensor<T>(kernels.shape()),
                 BasicTensor<T>(Shape{c_out})};
  for (std::size_t oy = 0; oy < g.out_height; ++oy)
    for (std::size_t ox = 0; ox < g.out_width; ++ox)
      for (std::size_t f = 0; f < c_out; ++f) {
        const T go = upstream.at(oy, ox, f);
        r.bias[f] += go;
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                            static_cast<std::ptrdiff_t>(g.pad_top);
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(input.height()) ||
                ix >= static_cast<std::ptrdiff_t>(input.width()))
              continue;
            for (std::size_t c = 0; c < c_in; ++c) {
              const std::size_t ki = ((ky * k + kx) * c_in + c) * c_out + f;
              r.kernels[ki] += input.at(iy, ix, c) * go;
              r.input.at(iy, ix, c) += kernels[ki] * go;
            }
          }
      }
  return r;
}

template <typename T>
BasicTensor<T> dense_channels_forward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& bias) {
  const std::size_t c_in = weights.shape()[0];
  const std::size_t c_out = weights.shape()[1];
  BasicTensor<T> out(Shape{input.height(), input.width(), c_out});
  for (std::size_t y = 0; y < input.height(); ++y)
    for (std::size_t x = 0; x < input.width(); ++x)
      for (std::size_t f = 0; f < c_out; ++f) {
        T sum = bias[f];
        for (std::size_t c = 0; c < c_in; ++c) sum += input.at(y, x, c) * weights[c * c_out + f];
        out.at(y, x, f) = sum;
      }
  return out;
}

template <typename T>
DenseGrads<T> dense_channels_backward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& upstream) {
  const std::size_t c_in = weights.shape()[0];
  const std::size_t c_out = weights.shape()[1];
  DenseGrads<T> r{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                  BasicTensor<T>(Shape{c_out})};
  for (std::size_t y = 0; y < input.height(); ++y)
    for (std::size_t x = 0; x < input.width(); ++x)
      for (std::size_t f = 0; f < c_out; ++f) {
        const T go = upstream.at(y, x, f);
        r.bias[f] += go;
        for (std::size_t c = 0; c < c_in; ++c) {
          r.weights[c * c_out + f] += input.at(y, x, c) * go;
          r.input.at(y, x, c) += weights[c * c_out + f] * go;
        }
      }
  return r;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
  PoolResult<T> r;
  r.input_shape = input.shape();
  const std::size_t oh = input.height() / 2;
  const std::size_t ow = input.width() / 2;
  const std::size_t c = input.channels();
  r.output = BasicTensor<T>(Shape{oh, ow, c});
  r.argmax.resize(r.output.size());
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t ch = 0; ch < c; ++ch) {
        bool first = true;
        T best{};
        std::size_t best_i = 0;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t i = ((2 * oy + dy) * input.width() + 2 * ox + dx) * c + ch;
            if (first || input[i] > best) {
              best = input[i];
              best_i = i;
              first = false;
            }
          }
        r.output.at(oy, ox, ch) = best;
        r.argmax[(oy * ow + ox) * c + ch] = static_cast<std::uint32_t>(best_i);
      }
  return r;
}

#define RDAE_INSTANTIATE_REFERENCE(T)                                                  \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                         const BasicTensor<T>&, std::size_t, Padding); \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                        std::size_t, Padding, const BasicTensor<T>&);  \
  template BasicTensor<T> dense_channels_forward(                                      \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);            \
  template DenseGrads<T> dense_channels_backward(                                      \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);            \
  template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);

RDAE_INSTANTIATE_REFERENCE(float)
RDAE_INSTANTIATE_REFERENCE(double)

#undef RDAE_INSTANTIATE_REFERENCE

}  // namespace rdae::reference
