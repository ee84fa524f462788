#include "rdae/layers.hpp"

// Eigen provides the GEMM; parallelism stays in the OpenMP loops below so
// the work split is independent of thread count.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace rdae {
namespace {

using Index = std::ptrdiff_t;

template <typename T>
void check_conv_args(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                     std::size_t stride) {
  require_hwc(input.shape(), "conv2d input");
  const Shape& ks = kernels.shape();
  if (ks.rank() != 4 || ks[0] != ks[1] || ks[0] == 0) {
    throw Error(Errc::kShape,
                "conv2d kernels must be k x k x C x F, got " + ks.str());
  }
  if (ks[2] != input.channels()) {
    throw Error(Errc::kShape, "conv2d: input " + input.shape().str() +
                                  " has " + std::to_string(input.channels()) +
                                  " channels but kernels " + ks.str() +
                                  " expect " + std::to_string(ks[2]));
  }
  if (stride == 0) throw Error(Errc::kInvalidArg, "conv2d: stride must be >= 1");
}

// (k, k, C, F) -> (k, k, F, C)
template <typename T>
std::vector<T> transpose_kernels(const BasicTensor<T>& kernels) {
  const std::size_t taps = kernels.shape()[0] * kernels.shape()[1];
  const std::size_t c_in = kernels.shape()[2];
  const std::size_t c_out = kernels.shape()[3];
  std::vector<T> out(kernels.size());
  for (std::size_t t = 0; t < taps; ++t) {
    const T* src = kernels.raw() + t * c_in * c_out;
    T* dst = out.data() + t * c_in * c_out;
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t f = 0; f < c_out; ++f) dst[f * c_in + c] = src[c * c_out + f];
    }
  }
  return out;
}

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PatchGeometry {
  Index h, w, c_in, k, stride, pad_top, pad_left, oh, ow, c_out;
};

template <typename T>
PatchGeometry patch_geometry(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                             std::size_t stride, Padding padding) {
  const ConvGeometry g = conv_geometry(input.height(), input.width(),
                                       kernels.shape()[0], stride, padding);
  return {static_cast<Index>(input.height()), static_cast<Index>(input.width()),
          static_cast<Index>(input.channels()), static_cast<Index>(kernels.shape()[0]),
          static_cast<Index>(stride), static_cast<Index>(g.pad_top),
          static_cast<Index>(g.pad_left), static_cast<Index>(g.out_height),
          static_cast<Index>(g.out_width), static_cast<Index>(kernels.shape()[3])};
}

// Output rows handled per work item. Depends only on the output width, so
// the blocking (and with it every floating-point sum) is the same for any
// thread count.
Index rows_per_block(Index out_width) { return std::max<Index>(1, 512 / out_width); }

// Patch matrix for output rows [oy0, oy1): one row per output pixel, columns
// ordered (ky, kx, c) to match the kernel layout. Out-of-image taps are zero.
template <typename T>
void im2col_rows(const T* in, const PatchGeometry& g, Index oy0, Index oy1, T* col) {
  const Index kc = g.k * g.k * g.c_in;
  for (Index oy = oy0; oy < oy1; ++oy) {
    for (Index ox = 0; ox < g.ow; ++ox) {
      T* dst = col + ((oy - oy0) * g.ow + ox) * kc;
      for (Index ky = 0; ky < g.k; ++ky) {
        const Index iy = oy * g.stride + ky - g.pad_top;
        for (Index kx = 0; kx < g.k; ++kx) {
          const Index ix = ox * g.stride + kx - g.pad_left;
          T* d = dst + (ky * g.k + kx) * g.c_in;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
            std::fill_n(d, g.c_in, T{0});
          } else {
            std::copy_n(in + (iy * g.w + ix) * g.c_in, g.c_in, d);
          }
        }
      }
    }
  }
}

// Direct loop nests, faster than patch GEMMs when one side has only a few
// channels (the RGB input and output layers).
bool use_gemm(const PatchGeometry& g) { return g.c_in >= 16 && g.c_out >= 16; }

template <typename T>
void conv_direct(const T* in, const PatchGeometry& g, const T* kernels, const T* b, T* o) {
  const Index k = g.k, c_in = g.c_in, c_out = g.c_out, s = g.stride;
  const Index h = g.h, w = g.w, oh = g.oh, ow = g.ow, pt = g.pad_top, pl = g.pad_left;
  if (c_out >= 8) {
    // Broadcast one input value across a contiguous row of output channels.
#pragma omp parallel for schedule(static)
    for (Index oy = 0; oy < oh; ++oy) {
      for (Index ox = 0; ox < ow; ++ox) {
        T* acc = o + (oy * ow + ox) * c_out;
        for (Index f = 0; f < c_out; ++f) acc[f] = b[f];
        for (Index ky = 0; ky < k; ++ky) {
          const Index iy = oy * s + ky - pt;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < k; ++kx) {
            const Index ix = ox * s + kx - pl;
            if (ix < 0 || ix >= w) continue;
            const T* ip = in + (iy * w + ix) * c_in;
            const T* kp = kernels + (ky * k + kx) * c_in * c_out;
            for (Index c = 0; c < c_in; ++c) {
              const T v = ip[c];
              const T* kr = kp + c * c_out;
#pragma omp simd
              for (Index f = 0; f < c_out; ++f) acc[f] += v * kr[f];
            }
          }
        }
      }
    }
    return;
  }
  // Few output channels: dot products along the input channels.
  std::vector<T> kt(static_cast<std::size_t>(k * k * c_in * c_out));
  for (Index t = 0; t < k * k; ++t)
    for (Index c = 0; c < c_in; ++c)
      for (Index f = 0; f < c_out; ++f)
        kt[(t * c_out + f) * c_in + c] = kernels[(t * c_in + c) * c_out + f];
#pragma omp parallel for schedule(static)
  for (Index oy = 0; oy < oh; ++oy) {
    for (Index ox = 0; ox < ow; ++ox) {
      T* acc = o + (oy * ow + ox) * c_out;
      for (Index f = 0; f < c_out; ++f) {
        T sum = b[f];
        for (Index ky = 0; ky < k; ++ky) {
          const Index iy = oy * s + ky - pt;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < k; ++kx) {
            const Index ix = ox * s + kx - pl;
            if (ix < 0 || ix >= w) continue;
            const T* ip = in + (iy * w + ix) * c_in;
            const T* kr = kt.data() + ((ky * k + kx) * c_out + f) * c_in;
            T part = 0;
#pragma omp simd reduction(+ : part)
            for (Index c = 0; c < c_in; ++c) part += ip[c] * kr[c];
            sum += part;
          }
        }
        acc[f] = sum;
      }
    }
  }
}

// Kernel gradient by direct accumulation. Each (ky, kx) tap owns a disjoint
// C x F slice and visits output positions in scan order.
template <typename T>
void kernel_grad_direct(const T* in, const PatchGeometry& g, const T* gout, T* gk) {
  const Index k = g.k, c_in = g.c_in, c_out = g.c_out, s = g.stride;
  const Index h = g.h, w = g.w, oh = g.oh, ow = g.ow, pt = g.pad_top, pl = g.pad_left;
  const Index taps = k * k;
  // Accumulate along whichever channel axis is longer, (C, F) or (F, C).
  const bool f_inner = c_out >= c_in;
  std::vector<T> acc(static_cast<std::size_t>(taps * c_in * c_out), T{0});
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < taps; ++t) {
    const Index ky = t / k;
    const Index kx = t % k;
    T* slice = acc.data() + t * c_in * c_out;
    for (Index oy = 0; oy < oh; ++oy) {
      const Index iy = oy * s + ky - pt;
      if (iy < 0 || iy >= h) continue;
      for (Index ox = 0; ox < ow; ++ox) {
        const Index ix = ox * s + kx - pl;
        if (ix < 0 || ix >= w) continue;
        const T* ip = in + (iy * w + ix) * c_in;
        const T* gp = gout + (oy * ow + ox) * c_out;
        if (f_inner) {
          for (Index c = 0; c < c_in; ++c) {
            const T v = ip[c];
            T* row = slice + c * c_out;
#pragma omp simd
            for (Index f = 0; f < c_out; ++f) row[f] += v * gp[f];
          }
        } else {
          for (Index f = 0; f < c_out; ++f) {
            const T v = gp[f];
            T* row = slice + f * c_in;
#pragma omp simd
            for (Index c = 0; c < c_in; ++c) row[c] += v * ip[c];
          }
        }
      }
    }
  }
  if (f_inner) {
    std::copy(acc.begin(), acc.end(), gk);
    return;
  }
  for (Index t = 0; t < taps; ++t)
    for (Index c = 0; c < c_in; ++c)
      for (Index f = 0; f < c_out; ++f)
        gk[(t * c_in + c) * c_out + f] = acc[(t * c_out + f) * c_in + c];
}

// out = patches(in) x kernels + bias, one GEMM per row block.
template <typename T>
void conv_gemm(const T* in, const PatchGeometry& g, const T* kernels, const T* bias, T* out) {
  const Index kc = g.k * g.k * g.c_in;
  const Index rows = rows_per_block(g.ow);
  const Index blocks = (g.oh + rows - 1) / rows;
  Eigen::Map<const RowMajor<T>> kmat(kernels, kc, g.c_out);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias, g.c_out);
#pragma omp parallel
  {
    std::vector<T> col;
#pragma omp for schedule(static)
    for (Index blk = 0; blk < blocks; ++blk) {
      const Index oy0 = blk * rows;
      const Index oy1 = std::min(g.oh, oy0 + rows);
      const Index m = (oy1 - oy0) * g.ow;
      col.resize(static_cast<std::size_t>(m * kc));
      im2col_rows(in, g, oy0, oy1, col.data());
      Eigen::Map<const RowMajor<T>> patches(col.data(), m, kc);
      Eigen::Map<RowMajor<T>> o(out + oy0 * g.ow * g.c_out, m, g.c_out);
      o.noalias() = patches * kmat;
      o.rowwise() += b;
    }
  }
}

}  // namespace

ConvGeometry conv_geometry(std::size_t height, std::size_t width, std::size_t k,
                           std::size_t stride, Padding padding) {
  ConvGeometry g;
  if (padding == Padding::kSame) {
    g.out_height = (height + stride - 1) / stride;
    g.out_width = (width + stride - 1) / stride;
    const std::size_t need_h = (g.out_height - 1) * stride + k;
    const std::size_t need_w = (g.out_width - 1) * stride + k;
    g.pad_top = need_h > height ? (need_h - height) / 2 : 0;
    g.pad_left = need_w > width ? (need_w - width) / 2 : 0;
  } else {
    if (height < k || width < k) {
      throw Error(Errc::kShape, "conv2d: valid padding needs input at least " +
                                    std::to_string(k) + "x" + std::to_string(k));
    }
    g.out_height = (height - k) / stride + 1;
    g.out_width = (width - k) / stride + 1;
  }
  return g;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride,
                              Padding padding) {
  check_conv_args(input, kernels, stride);
  if (bias.size() != kernels.shape()[3]) {
    throw Error(Errc::kShape, "conv2d: bias " + bias.shape().str() +
                                  " does not match kernels " +
                                  kernels.shape().str());
  }
  const PatchGeometry pg = patch_geometry(input, kernels, stride, padding);
  BasicTensor<T> out(Shape{static_cast<std::size_t>(pg.oh),
                           static_cast<std::size_t>(pg.ow), kernels.shape()[3]});
  if (use_gemm(pg)) {
    conv_gemm(input.raw(), pg, kernels.raw(), bias.raw(), out.raw());
  } else {
    conv_direct(input.raw(), pg, kernels.raw(), bias.raw(), out.raw());
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& kernels, std::size_t stride,
                             Padding padding, const BasicTensor<T>& upstream,
                             bool want_input_grad) {
  check_conv_args(input, kernels, stride);
  const PatchGeometry pg = patch_geometry(input, kernels, stride, padding);
  require_same_shape(upstream.shape(),
                     Shape{static_cast<std::size_t>(pg.oh),
                           static_cast<std::size_t>(pg.ow), kernels.shape()[3]},
                     "conv2d backward upstream");
  const Index c_out = pg.c_out;
  const T* gout = upstream.raw();

  ConvGrads<T> grads;
  grads.bias = BasicTensor<T>(Shape{kernels.shape()[3]});
  {
    T* gb = grads.bias.raw();
    for (Index p = 0; p < pg.oh * pg.ow; ++p) {
      const T* gp = gout + p * c_out;
      for (Index f = 0; f < c_out; ++f) gb[f] += gp[f];
    }
  }

  // Kernel gradient: per row block, patches^T x upstream; block partials are
  // summed in block order afterwards.
  grads.kernels = BasicTensor<T>(kernels.shape());
  if (!use_gemm(pg)) {
    kernel_grad_direct(input.raw(), pg, gout, grads.kernels.raw());
  } else {
    const Index kc = pg.k * pg.k * pg.c_in;
    const Index rows = rows_per_block(pg.ow);
    const Index blocks = (pg.oh + rows - 1) / rows;
    std::vector<T> partial(static_cast<std::size_t>(blocks * kc * c_out));
#pragma omp parallel
    {
      std::vector<T> col;
#pragma omp for schedule(static)
      for (Index b = 0; b < blocks; ++b) {
        const Index oy0 = b * rows;
        const Index oy1 = std::min(pg.oh, oy0 + rows);
        const Index m = (oy1 - oy0) * pg.ow;
        col.resize(static_cast<std::size_t>(m * kc));
        im2col_rows(input.raw(), pg, oy0, oy1, col.data());
        Eigen::Map<const RowMajor<T>> patches(col.data(), m, kc);
        Eigen::Map<const RowMajor<T>> g(gout + oy0 * pg.ow * c_out, m, c_out);
        Eigen::Map<RowMajor<T>> p(partial.data() + b * kc * c_out, kc, c_out);
        p.noalias() = patches.transpose() * g;
      }
    }
    T* gk = grads.kernels.raw();
    for (Index b = 0; b < blocks; ++b) {
      const T* p = partial.data() + b * kc * c_out;
      for (Index i = 0; i < kc * c_out; ++i) gk[i] += p[i];
    }
  }

  if (!want_input_grad) return grads;

  const Index k = pg.k;
  const Index c_in = pg.c_in;
  const std::vector<T> kt = transpose_kernels(kernels);
  if (stride == 1 && padding == Padding::kSame && k % 2 == 1) {
    // Stride-1 same padding with an odd kernel: the input gradient is a same
    // convolution of the upstream gradient with the spatially flipped,
    // channel-transposed kernels.
    std::vector<T> flipped(kernels.size());
    for (Index ky = 0; ky < k; ++ky)
      for (Index kx = 0; kx < k; ++kx) {
        const T* src = kt.data() + ((k - 1 - ky) * k + (k - 1 - kx)) * c_out * c_in;
        std::copy_n(src, c_out * c_in, flipped.data() + (ky * k + kx) * c_out * c_in);
      }
    BasicTensor<T> shape_probe(Shape{static_cast<std::size_t>(k), static_cast<std::size_t>(k),
                                     static_cast<std::size_t>(c_out),
                                     static_cast<std::size_t>(c_in)});
    const PatchGeometry back = patch_geometry(upstream, shape_probe, 1, Padding::kSame);
    const std::vector<T> zero_bias(static_cast<std::size_t>(c_in), T{0});
    grads.input = BasicTensor<T>(input.shape());
    if (use_gemm(back)) {
      conv_gemm(gout, back, flipped.data(), zero_bias.data(), grads.input.raw());
    } else {
      conv_direct(gout, back, flipped.data(), zero_bias.data(), grads.input.raw());
    }
    return grads;
  }

  // General case: every input pixel gathers from the outputs whose receptive
  // field covers it.
  const Index h = pg.h;
  const Index w = pg.w;
  const Index oh = pg.oh;
  const Index ow = pg.ow;
  const Index s = pg.stride;
  const Index pt = pg.pad_top;
  const Index pl = pg.pad_left;
  grads.input = BasicTensor<T>(input.shape());
  T* gin = grads.input.raw();
#pragma omp parallel for schedule(static)
  for (Index iy = 0; iy < h; ++iy) {
    for (Index ix = 0; ix < w; ++ix) {
      T* acc = gin + (iy * w + ix) * c_in;
      for (Index ky = 0; ky < k; ++ky) {
        const Index ny = iy + pt - ky;
        if (ny < 0 || ny % s != 0) continue;
        const Index oy = ny / s;
        if (oy >= oh) continue;
        for (Index kx = 0; kx < k; ++kx) {
          const Index nx = ix + pl - kx;
          if (nx < 0 || nx % s != 0) continue;
          const Index ox = nx / s;
          if (ox >= ow) continue;
          const T* gp = gout + (oy * ow + ox) * c_out;
          const T* kr = kt.data() + (ky * k + kx) * c_out * c_in;
          for (Index f = 0; f < c_out; ++f) {
            const T v = gp[f];
            const T* row = kr + f * c_in;
            for (Index c = 0; c < c_in; ++c) acc[c] += v * row[c];
          }
        }
      }
    }
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
  require_hwc(input.shape(), "maxpool2x2 input");
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t c = input.channels();
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(Errc::kShape,
                "maxpool2x2 needs even height and width, got " + input.shape().str());
  }
  PoolResult<T> r;
  r.input_shape = input.shape();
  r.output = BasicTensor<T>(Shape{h / 2, w / 2, c});
  r.argmax.resize(r.output.size());
  const Index oh = static_cast<Index>(h / 2);
  const Index ow = static_cast<Index>(w / 2);
  const Index wi = static_cast<Index>(w);
  const Index ci = static_cast<Index>(c);
  const T* in = input.raw();
  T* out = r.output.raw();
  std::uint32_t* am = r.argmax.data();
#pragma omp parallel for schedule(static)
  for (Index oy = 0; oy < oh; ++oy) {
    for (Index ox = 0; ox < ow; ++ox) {
      const Index base = ((2 * oy) * wi + 2 * ox) * ci;
      const Index offsets[4] = {0, ci, wi * ci, wi * ci + ci};
      for (Index ch = 0; ch < ci; ++ch) {
        Index best = base + ch;
        T best_v = in[best];
        for (int q = 1; q < 4; ++q) {
          const Index idx = base + offsets[q] + ch;
          if (in[idx] > best_v) {
            best_v = in[idx];
            best = idx;
          }
        }
        const Index o = (oy * ow + ox) * ci + ch;
        out[o] = best_v;
        am[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const PoolResult<T>& pooled,
                                   const BasicTensor<T>& upstream) {
  require_same_shape(upstream.shape(), pooled.output.shape(),
                     "maxpool2x2 backward upstream");
  BasicTensor<T> grad(pooled.input_shape);
  // Windows do not overlap, so each input element receives at most one
  // contribution.
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    grad[pooled.argmax[i]] = upstream[i];
  }
  return grad;
}

template <typename T>
BasicTensor<T> upsample2x2_forward(const BasicTensor<T>& input) {
  require_hwc(input.shape(), "upsample2x2 input");
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t c = input.channels();
  BasicTensor<T> out(Shape{2 * h, 2 * w, c});
  const Index oh = static_cast<Index>(2 * h);
#pragma omp parallel for schedule(static)
  for (Index oy = 0; oy < oh; ++oy) {
    const std::size_t y = static_cast<std::size_t>(oy);
    for (std::size_t ox = 0; ox < 2 * w; ++ox) {
      const T* src = input.raw() + ((y / 2) * w + ox / 2) * c;
      T* dst = out.raw() + (y * 2 * w + ox) * c;
      std::copy(src, src + c, dst);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> upsample2x2_backward(const BasicTensor<T>& upstream) {
  require_hwc(upstream.shape(), "upsample2x2 backward upstream");
  const std::size_t h = upstream.height();
  const std::size_t w = upstream.width();
  const std::size_t c = upstream.channels();
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(Errc::kShape, "upsample2x2 backward needs even height and width, got " +
                                  upstream.shape().str());
  }
  BasicTensor<T> grad(Shape{h / 2, w / 2, c});
  const Index gh = static_cast<Index>(h / 2);
#pragma omp parallel for schedule(static)
  for (Index gy = 0; gy < gh; ++gy) {
    const std::size_t y = static_cast<std::size_t>(gy);
    for (std::size_t x = 0; x < w / 2; ++x) {
      T* dst = grad.raw() + (y * (w / 2) + x) * c;
      const T* a = upstream.raw() + ((2 * y) * w + 2 * x) * c;
      const T* b = a + c;
      const T* d = a + w * c;
      const T* e = d + c;
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] = ((a[ch] + b[ch]) + d[ch]) + e[ch];
    }
  }
  return grad;
}

template <typename T>
BasicTensor<T> dense_channels_forward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& bias) {
  require_hwc(input.shape(), "dense_channels input");
  if (weights.shape().rank() != 2 || weights.shape()[0] != input.channels()) {
    throw Error(Errc::kShape, "dense_channels: input " + input.shape().str() +
                                  " incompatible with weights " +
                                  weights.shape().str());
  }
  const Index c_in = static_cast<Index>(weights.shape()[0]);
  const Index c_out = static_cast<Index>(weights.shape()[1]);
  if (bias.size() != static_cast<std::size_t>(c_out)) {
    throw Error(Errc::kShape, "dense_channels: bias " + bias.shape().str() +
                                  " does not match weights " + weights.shape().str());
  }
  BasicTensor<T> out(Shape{input.height(), input.width(), weights.shape()[1]});
  const Index n = static_cast<Index>(input.height() * input.width());
  const T* in = input.raw();
  const T* wt = weights.raw();
  const T* b = bias.raw();
  T* o = out.raw();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    T* acc = o + p * c_out;
    const T* ip = in + p * c_in;
    for (Index f = 0; f < c_out; ++f) acc[f] = b[f];
    for (Index c = 0; c < c_in; ++c) {
      const T v = ip[c];
      const T* row = wt + c * c_out;
#pragma omp simd
      for (Index f = 0; f < c_out; ++f) acc[f] += v * row[f];
    }
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_channels_backward(const BasicTensor<T>& input,
                                      const BasicTensor<T>& weights,
                                      const BasicTensor<T>& upstream) {
  require_hwc(input.shape(), "dense_channels input");
  if (weights.shape().rank() != 2 || weights.shape()[0] != input.channels()) {
    throw Error(Errc::kShape, "dense_channels: input " + input.shape().str() +
                                  " incompatible with weights " +
                                  weights.shape().str());
  }
  require_same_shape(upstream.shape(),
                     Shape{input.height(), input.width(), weights.shape()[1]},
                     "dense_channels backward upstream");
  const Index c_in = static_cast<Index>(weights.shape()[0]);
  const Index c_out = static_cast<Index>(weights.shape()[1]);
  const Index n = static_cast<Index>(input.height() * input.width());
  const T* in = input.raw();
  const T* wt = weights.raw();
  const T* gout = upstream.raw();

  DenseGrads<T> g;
  g.input = BasicTensor<T>(input.shape());
  g.weights = BasicTensor<T>(weights.shape());
  g.bias = BasicTensor<T>(Shape{weights.shape()[1]});
  T* gin = g.input.raw();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    const T* gp = gout + p * c_out;
    T* acc = gin + p * c_in;
    for (Index c = 0; c < c_in; ++c) {
      const T* row = wt + c * c_out;
      T sum = 0;
      for (Index f = 0; f < c_out; ++f) sum += gp[f] * row[f];
      acc[c] = sum;
    }
  }
  T* gw = g.weights.raw();
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < c_in; ++c) {
    T* row = gw + c * c_out;
    for (Index p = 0; p < n; ++p) {
      const T v = in[p * c_in + c];
      const T* gp = gout + p * c_out;
#pragma omp simd
      for (Index f = 0; f < c_out; ++f) row[f] += v * gp[f];
    }
  }
  T* gb = g.bias.raw();
  for (Index p = 0; p < n; ++p) {
    for (Index f = 0; f < c_out; ++f) gb[f] += gout[p * c_out + f];
  }
  return g;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? input[i] : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& output,
                             const BasicTensor<T>& upstream) {
  require_same_shape(upstream.shape(), output.shape(), "relu backward");
  BasicTensor<T> g(output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = output[i] > T{0} ? upstream[i] : T{0};
  return g;
}

template <typename T>
BasicTensor<T> sigmoid_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    // Branch on sign so exp never overflows.
    const T x = input[i];
    if (x >= T{0}) {
      out[i] = T{1} / (T{1} + std::exp(-x));
    } else {
      const T e = std::exp(x);
      out[i] = e / (T{1} + e);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output,
                                const BasicTensor<T>& upstream) {
  require_same_shape(upstream.shape(), output.shape(), "sigmoid backward");
  BasicTensor<T> g(output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = upstream[i] * output[i] * (T{1} - output[i]);
  }
  return g;
}

template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& prediction,
                       const BasicTensor<T>& target) {
  require_same_shape(prediction.shape(), target.shape(), "mse_loss");
  LossResult<T> r;
  r.grad = BasicTensor<T>(prediction.shape());
  const std::size_t n = prediction.size();
  // Accumulate in double so float training losses do not drift with size.
  double sum = 0.0;
  const T scale = T{2} / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T d = prediction[i] - target[i];
    sum += static_cast<double>(d) * static_cast<double>(d);
    r.grad[i] = scale * d;
  }
  r.loss = static_cast<T>(sum / static_cast<double>(n));
  return r;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_hwc(a.shape(), "concat_channels first operand");
  require_hwc(b.shape(), "concat_channels second operand");
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(Errc::kShape, "concat_channels: spatial sizes differ: " +
                                  a.shape().str() + " vs " + b.shape().str());
  }
  const std::size_t ca = a.channels();
  const std::size_t cb = b.channels();
  BasicTensor<T> out(Shape{a.height(), a.width(), ca + cb});
  const std::size_t n = a.height() * a.width();
  for (std::size_t p = 0; p < n; ++p) {
    std::copy_n(a.raw() + p * ca, ca, out.raw() + p * (ca + cb));
    std::copy_n(b.raw() + p * cb, cb, out.raw() + p * (ca + cb) + ca);
  }
  return out;
}

template <typename T>
void split_channels(const BasicTensor<T>& joined, std::size_t first_channels,
                    BasicTensor<T>& a, BasicTensor<T>& b) {
  require_hwc(joined.shape(), "split_channels");
  const std::size_t c = joined.channels();
  if (first_channels > c) {
    throw Error(Errc::kShape, "split_channels: cannot take " +
                                  std::to_string(first_channels) + " channels from " +
                                  joined.shape().str());
  }
  const std::size_t cb = c - first_channels;
  a = BasicTensor<T>(Shape{joined.height(), joined.width(), first_channels});
  b = BasicTensor<T>(Shape{joined.height(), joined.width(), cb});
  const std::size_t n = joined.height() * joined.width();
  for (std::size_t p = 0; p < n; ++p) {
    std::copy_n(joined.raw() + p * c, first_channels, a.raw() + p * first_channels);
    std::copy_n(joined.raw() + p * c + first_channels, cb, b.raw() + p * cb);
  }
}

#define RDAE_INSTANTIATE_LAYERS(T)                                                     \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                         const BasicTensor<T>&, std::size_t, Padding); \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                        std::size_t, Padding, const BasicTensor<T>&,   \
                                        bool);                                         \
  template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);                    \
  template BasicTensor<T> maxpool2x2_backward(const PoolResult<T>&,                    \
                                              const BasicTensor<T>&);                  \
  template BasicTensor<T> upsample2x2_forward(const BasicTensor<T>&);                  \
  template BasicTensor<T> upsample2x2_backward(const BasicTensor<T>&);                 \
  template BasicTensor<T> dense_channels_forward(                                      \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);            \
  template DenseGrads<T> dense_channels_backward(                                      \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                         \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> sigmoid_forward(const BasicTensor<T>&);                      \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&,                      \
                                           const BasicTensor<T>&);                     \
  template LossResult<T> mse_loss(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&); \
  template void split_channels(const BasicTensor<T>&, std::size_t, BasicTensor<T>&,    \
                               BasicTensor<T>&);

RDAE_INSTANTIATE_LAYERS(float)
RDAE_INSTANTIATE_LAYERS(double)

#undef RDAE_INSTANTIATE_LAYERS

}  // namespace rdae
