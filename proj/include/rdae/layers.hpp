#pragma once

#include <cstdint>
#include <vector>

#include "rdae/tensor.hpp"

// Layer kernels for the fixed compression network. All tensors are (H, W, C)
// row-major; convolution kernels are (k, k, C_in, C_out) and dense channel
// weights are (C_in, C_out).
//
// The kernels here parallelize over output rows (or over independent weight
// slices) with OpenMP. Every output element is accumulated in the same order
// regardless of thread count, so results are bit-identical to a
// single-threaded run. Straightforward loop-nest versions of the same
// operations live in rdae/reference_layers.hpp and serve as test oracles.

namespace rdae {

enum class Padding { kSame, kValid };

struct ConvGeometry {
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;
};

// Output size and leading padding for a k x k convolution. Same padding
// follows the TensorFlow convention: out = ceil(in / stride), with the odd
// padding pixel placed at the bottom/right.
ConvGeometry conv_geometry(std::size_t height, std::size_t width,
                           std::size_t k, std::size_t stride, Padding padding);

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride,
                              Padding padding);

// `want_input_grad = false` skips the input gradient for a network's first
// layer, where nothing consumes it.
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& kernels, std::size_t stride,
                             Padding padding,
                             const BasicTensor<T>& upstream,
                             bool want_input_grad = true);

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  // Flat index into the input tensor of the winning element, one per output.
  std::vector<std::uint32_t> argmax;
  Shape input_shape;
};

// 2x2 max pooling with stride 2. Ties go to the first element in scan order
// (top-left, top-right, bottom-left, bottom-right).
template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const PoolResult<T>& pooled,
                                   const BasicTensor<T>& upstream);

// Nearest-neighbour 2x upsampling.
template <typename T>
BasicTensor<T> upsample2x2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> upsample2x2_backward(const BasicTensor<T>& upstream);

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

// Per-position affine map of the channel vector: out[y,x,:] = in[y,x,:] W + b.
template <typename T>
BasicTensor<T> dense_channels_forward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_channels_backward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

// Gate by the forward *output*: gradient passes where output > 0, which is
// the same set as input > 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& output,
                             const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> sigmoid_forward(const BasicTensor<T>& input);

// Uses the forward output s: d/dx = s (1 - s).
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output,
                                const BasicTensor<T>& upstream);

template <typename T>
struct LossResult {
  T loss{};
  BasicTensor<T> grad;
};

// Mean squared error over all elements; grad = 2 (prediction - target) / N.
template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& prediction,
                       const BasicTensor<T>& target);

// Channel concatenation of two (H, W, C1) and (H, W, C2) tensors, and its
// adjoint.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
void split_channels(const BasicTensor<T>& joined, std::size_t first_channels,
                    BasicTensor<T>& a, BasicTensor<T>& b);

}  // namespace rdae
