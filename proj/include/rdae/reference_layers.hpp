#pragma once

#include "rdae/layers.hpp"

// Serial loop-nest implementations written directly from the definitions.
// They are slow and exist only to check the parallel kernels.
namespace rdae::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride,
                              Padding padding);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& kernels, std::size_t stride,
                             Padding padding, const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> dense_channels_forward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_channels_backward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& upstream);

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);

}  // namespace rdae::reference
