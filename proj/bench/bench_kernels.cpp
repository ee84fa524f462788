// Parallel kernels against the serial reference on the network's layer shapes.

#include <benchmark/benchmark.h>

#include "rdae/layers.hpp"
#include "rdae/model.hpp"
#include "rdae/reference_layers.hpp"
#include "rdae/rng.hpp"

namespace {

using rdae::Padding;
using rdae::Shape;
using rdae::Tensor;

Tensor random_tensor(std::uint64_t seed, Shape shape) {
  rdae::CounterRng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

// (spatial size, C_in, C_out) of the encoder/decoder convolutions.
const std::vector<std::vector<int64_t>> kConvShapes = {
    {128, 3, 64}, {64, 64, 32}, {32, 32, 32}, {16, 16, 32}, {128, 64, 3}};

void conv_args(benchmark::internal::Benchmark* b) {
  for (const auto& s : kConvShapes) b->Args(s);
}

template <bool kReference>
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto f = static_cast<std::size_t>(state.range(2));
  const Tensor x = random_tensor(1, Shape{n, n, c});
  const Tensor k = random_tensor(2, Shape{3, 3, c, f});
  const Tensor b = random_tensor(3, Shape{f});
  for (auto _ : state) {
    Tensor out = kReference ? rdae::reference::conv2d_forward(x, k, b, 1, Padding::kSame)
                            : rdae::conv2d_forward(x, k, b, 1, Padding::kSame);
    benchmark::DoNotOptimize(out.raw());
  }
  state.counters["GMAC/s"] = benchmark::Counter(
      static_cast<double>(n * n * 9 * c * f) * state.iterations() / 1e9, benchmark::Counter::kIsRate);
}

template <bool kReference>
void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto f = static_cast<std::size_t>(state.range(2));
  const Tensor x = random_tensor(1, Shape{n, n, c});
  const Tensor k = random_tensor(2, Shape{3, 3, c, f});
  const Tensor up = random_tensor(3, Shape{n, n, f});
  for (auto _ : state) {
    auto g = kReference ? rdae::reference::conv2d_backward(x, k, 1, Padding::kSame, up)
                        : rdae::conv2d_backward(x, k, 1, Padding::kSame, up);
    benchmark::DoNotOptimize(g.kernels.raw());
  }
}

template <bool kReference>
void BM_Dense(benchmark::State& state) {
  const Tensor x = random_tensor(1, Shape{16, 16, 32});
  const Tensor w = random_tensor(2, Shape{32, 16});
  const Tensor b = random_tensor(3, Shape{16});
  for (auto _ : state) {
    Tensor out = kReference ? rdae::reference::dense_channels_forward(x, w, b)
                            : rdae::dense_channels_forward(x, w, b);
    benchmark::DoNotOptimize(out.raw());
  }
}

template <bool kReference>
void BM_MaxPool(benchmark::State& state) {
  const Tensor x = random_tensor(1, Shape{128, 128, 64});
  for (auto _ : state) {
    auto p = kReference ? rdae::reference::maxpool2x2_forward(x) : rdae::maxpool2x2_forward(x);
    benchmark::DoNotOptimize(p.output.raw());
  }
}

void BM_AnalyzeImage(benchmark::State& state) {
  const rdae::DualModel model = rdae::DualModel::initialize(1);
  const Tensor x = random_tensor(4, rdae::image_shape());
  for (auto _ : state) {
    auto lp = rdae::analyze(x, model);
    benchmark::DoNotOptimize(lp.ls2.tensor().raw());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/parallel")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/reference")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/parallel")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/reference")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<false>)->Name("dense/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<true>)->Name("dense/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPool<false>)->Name("maxpool/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPool<true>)->Name("maxpool/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AnalyzeImage)->Name("analyze_image")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
