#include <doctest.h>
#include <omp.h>

#include "rdae/layers.hpp"
#include "rdae/reference_layers.hpp"
#include "support.hpp"

using namespace rdae;
using testing::fd_max_rel_error;
using testing::random_tensor;

TEST_CASE("conv2d forward: hand examples") {
  SUBCASE("same padding keeps the spatial size") {
    Tensor out = conv2d_forward(Tensor(Shape{128, 128, 3}), Tensor(Shape{3, 3, 3, 64}),
                                Tensor(Shape{64}), 1, Padding::kSame);
    CHECK(out.shape() == Shape{128, 128, 64});
  }
  SUBCASE("scalar product") {
    Tensor out = conv2d_forward(Tensor(Shape{1, 1, 1}, 2.0f), Tensor(Shape{1, 1, 1, 1}, 3.0f),
                                Tensor(Shape{1}), 1, Padding::kSame);
    CHECK(out[0] == 6.0f);
  }
  SUBCASE("valid 2x2 sum") {
    Tensor out = conv2d_forward(Tensor(Shape{2, 2, 1}, 1.0f), Tensor(Shape{2, 2, 1, 1}, 1.0f),
                                Tensor(Shape{1}), 1, Padding::kValid);
    CHECK(out.shape() == Shape{1, 1, 1});
    CHECK(out[0] == 4.0f);
  }
  SUBCASE("stride 2 same padding rounds up") {
    Tensor out = conv2d_forward(Tensor(Shape{7, 5, 2}), Tensor(Shape{3, 3, 2, 4}),
                                Tensor(Shape{4}), 2, Padding::kSame);
    CHECK(out.shape() == Shape{4, 3, 4});
  }
  SUBCASE("channel mismatch names both shapes") {
    try {
      conv2d_forward(Tensor(Shape{4, 4, 3}), Tensor(Shape{3, 3, 2, 8}), Tensor(Shape{8}), 1,
                     Padding::kSame);
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kShape);
      const std::string msg = e.what();
      CHECK(msg.find("[4x4x3]") != std::string::npos);
      CHECK(msg.find("[3x3x2x8]") != std::string::npos);
    }
  }
}

TEST_CASE("conv2d backward: hand examples") {
  const Tensor in(Shape{1, 1, 1}, 2.0f);
  const Tensor k(Shape{1, 1, 1, 1}, 3.0f);
  auto g = conv2d_backward(in, k, 1, Padding::kSame, Tensor(Shape{1, 1, 1}, 1.0f));
  CHECK(g.input[0] == 3.0f);
  CHECK(g.kernels[0] == 2.0f);
  CHECK(g.bias[0] == 1.0f);

  CounterRng rng(11);
  const Tensor x = random_tensor<float>(rng, Shape{6, 6, 2});
  const Tensor kk = random_tensor<float>(rng, Shape{3, 3, 2, 4});
  auto z = conv2d_backward(x, kk, 1, Padding::kSame, Tensor(Shape{6, 6, 4}));
  for (float v : z.input.data()) CHECK(v == 0.0f);
  for (float v : z.kernels.data()) CHECK(v == 0.0f);
  for (float v : z.bias.data()) CHECK(v == 0.0f);

  CHECK_THROWS_AS(conv2d_backward(x, kk, 1, Padding::kSame, Tensor(Shape{6, 5, 4})), Error);
}

TEST_CASE("conv2d backward matches finite differences") {
  SUBCASE("6x6x2 input, 3x3x2x4 kernels") {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      CounterRng rng(CounterRng::derive(3, trial));
      TensorD x = random_tensor<double>(rng, Shape{6, 6, 2});
      TensorD k = random_tensor<double>(rng, Shape{3, 3, 2, 4});
      TensorD b = random_tensor<double>(rng, Shape{4});
      const TensorD w = random_tensor<double>(rng, Shape{6, 6, 4});
      auto obj = [&] { return testing::dot(conv2d_forward(x, k, b, 1, Padding::kSame), w); };
      auto g = conv2d_backward(x, k, 1, Padding::kSame, w);
      CHECK(fd_max_rel_error(x, g.input, obj) < 1e-4);
      CHECK(fd_max_rel_error(k, g.kernels, obj) < 1e-4);
      CHECK(fd_max_rel_error(b, g.bias, obj) < 1e-4);
    }
  }
  SUBCASE("wide layer on the GEMM path") {
    CounterRng rng(21);
    TensorD x = random_tensor<double>(rng, Shape{6, 6, 16});
    TensorD k = random_tensor<double>(rng, Shape{3, 3, 16, 16}, -0.3, 0.3);
    TensorD b = random_tensor<double>(rng, Shape{16});
    const TensorD w = random_tensor<double>(rng, Shape{6, 6, 16});
    auto obj = [&] { return testing::dot(conv2d_forward(x, k, b, 1, Padding::kSame), w); };
    auto g = conv2d_backward(x, k, 1, Padding::kSame, w);
    CHECK(fd_max_rel_error(x, g.input, obj, 1e-5, 7) < 1e-4);
    CHECK(fd_max_rel_error(k, g.kernels, obj, 1e-5, 13) < 1e-4);
    CHECK(fd_max_rel_error(b, g.bias, obj) < 1e-4);
  }
}

TEST_CASE("maxpool") {
  Tensor win(Shape{2, 2, 1}, std::vector<float>{1, 2, 3, 4});
  auto p = maxpool2x2_forward(win);
  CHECK(p.output[0] == 4.0f);
  CHECK(p.argmax[0] == 3u);
  Tensor g = maxpool2x2_backward(p, Tensor(Shape{1, 1, 1}, 5.0f));
  CHECK(g == Tensor(Shape{2, 2, 1}, std::vector<float>{0, 0, 0, 5}));
  CHECK(maxpool2x2_backward(p, Tensor(Shape{1, 1, 1})) == Tensor(Shape{2, 2, 1}));

  auto c = maxpool2x2_forward(Tensor(Shape{4, 4, 2}, 0.5f));
  for (float v : c.output.data()) CHECK(v == 0.5f);
  // First element of every window in scan order.
  CHECK(c.argmax[0] == 0u);
  CHECK(c.argmax[1] == 1u);
  CHECK(c.argmax[2] == 4u);

  CHECK(maxpool2x2_forward(Tensor(Shape{128, 128, 64})).output.shape() == Shape{64, 64, 64});
  CHECK_THROWS_AS(maxpool2x2_forward(Tensor(Shape{3, 4, 1})), Error);
  CHECK_THROWS_AS(maxpool2x2_backward(p, Tensor(Shape{2, 1, 1})), Error);

  CounterRng rng(5);
  // Random 8x8x2 input; random doubles are tie-free with overwhelming margin
  // relative to h, which the check below confirms by staying tight.
  TensorD x = random_tensor<double>(rng, Shape{8, 8, 2});
  const TensorD w = random_tensor<double>(rng, Shape{4, 4, 2});
  auto pd = maxpool2x2_forward(x);
  const TensorD gd = maxpool2x2_backward(pd, w);
  CHECK(fd_max_rel_error(x, gd, [&] { return testing::dot(maxpool2x2_forward(x).output, w); }) < 1e-4);
}

TEST_CASE("upsample") {
  CHECK(upsample2x2_forward(Tensor(Shape{1, 1, 1}, 7.0f)) == Tensor(Shape{2, 2, 1}, 7.0f));
  Tensor up(Shape{2, 2, 1}, std::vector<float>{1, 2, 3, 4});
  CHECK(upsample2x2_backward(up)[0] == 10.0f);
  CHECK(upsample2x2_forward(Tensor(Shape{16, 16, 16})).shape() == Shape{32, 32, 16});
}

TEST_CASE("dense channels") {
  CounterRng rng(9);
  const Tensor x = random_tensor<float>(rng, Shape{3, 3, 4});
  Tensor eye(Shape{4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
  CHECK(dense_channels_forward(x, eye, Tensor(Shape{4})) == x);
  CHECK(dense_channels_forward(Tensor(Shape{16, 16, 32}), Tensor(Shape{32, 16}), Tensor(Shape{16}))
            .shape() == Shape{16, 16, 16});
  CHECK_THROWS_AS(dense_channels_forward(x, Tensor(Shape{3, 2}), Tensor(Shape{2})), Error);

  TensorD xd = random_tensor<double>(rng, Shape{4, 4, 3});
  TensorD wd = random_tensor<double>(rng, Shape{3, 2});
  TensorD bd = random_tensor<double>(rng, Shape{2});
  const TensorD up = random_tensor<double>(rng, Shape{4, 4, 2});
  auto g = dense_channels_backward(xd, wd, up);
  auto obj = [&] { return testing::dot(dense_channels_forward(xd, wd, bd), up); };
  CHECK(fd_max_rel_error(xd, g.input, obj) < 1e-4);
  CHECK(fd_max_rel_error(wd, g.weights, obj) < 1e-4);
  CHECK(fd_max_rel_error(bd, g.bias, obj) < 1e-4);
}

TEST_CASE("activations") {
  const Tensor r = relu_forward(Tensor(Shape{3}, std::vector<float>{-1, 0, 2}));
  CHECK(r == Tensor(Shape{3}, std::vector<float>{0, 0, 2}));
  const Tensor s = sigmoid_forward(Tensor(Shape{1}));
  CHECK(s[0] == 0.5f);
  CHECK(sigmoid_backward(s, Tensor(Shape{1}, 1.0f))[0] == 0.25f);

  // Float saturates to exactly 0 or 1 far out; the open interval holds over
  // the range a trained decoder produces.
  const Tensor wide = sigmoid_forward(Tensor(Shape{5}, std::vector<float>{-1e30f, -80, 0, 80, 1e30f}));
  for (float v : wide.data()) CHECK((v >= 0.0f && v <= 1.0f));
  CounterRng rng(2);
  const Tensor mid = sigmoid_forward(random_tensor<float>(rng, Shape{1000}, -15, 15));
  for (float v : mid.data()) CHECK((v > 0.0f && v < 1.0f));
  CHECK(all_finite(wide));
}

TEST_CASE("mse loss") {
  auto same = mse_loss(Tensor(Shape{3}, 0.4f), Tensor(Shape{3}, 0.4f));
  CHECK(same.loss == 0.0f);
  for (float g : same.grad.data()) CHECK(g == 0.0f);
  auto scalar = mse_loss(Tensor(Shape{1}, 1.0f), Tensor(Shape{1}, 0.0f));
  CHECK(scalar.loss == 1.0f);
  CHECK(scalar.grad[0] == 2.0f);
  auto pair = mse_loss(Tensor(Shape{2}, std::vector<float>{1, 3}), Tensor(Shape{2}, std::vector<float>{0, 1}));
  CHECK(pair.loss == 2.5f);
  CHECK_THROWS_AS(mse_loss(Tensor(Shape{2}), Tensor(Shape{3})), Error);
}

TEST_CASE("parallel kernels agree with the serial reference") {
  CounterRng rng(77);
  struct Case {
    Shape in, k;
    std::size_t stride;
    Padding pad;
  };
  const Case cases[] = {
      {Shape{32, 32, 3}, Shape{3, 3, 3, 64}, 1, Padding::kSame},
      {Shape{16, 16, 64}, Shape{3, 3, 64, 32}, 1, Padding::kSame},
      {Shape{16, 16, 32}, Shape{3, 3, 32, 3}, 1, Padding::kSame},
      {Shape{9, 7, 5}, Shape{3, 3, 5, 6}, 2, Padding::kSame},
      {Shape{9, 7, 5}, Shape{2, 2, 5, 6}, 1, Padding::kValid},
  };
  for (const Case& c : cases) {
    CAPTURE(c.in.str());
    const TensorD x = random_tensor<double>(rng, c.in);
    const TensorD k = random_tensor<double>(rng, c.k);
    const TensorD b = random_tensor<double>(rng, Shape{c.k[3]});
    const TensorD out = conv2d_forward(x, k, b, c.stride, c.pad);
    const TensorD ref = reference::conv2d_forward(x, k, b, c.stride, c.pad);
    REQUIRE(out.shape() == ref.shape());
    CHECK(testing::max_abs_diff(out, ref) < 1e-10);
    const TensorD up = random_tensor<double>(rng, out.shape());
    auto g = conv2d_backward(x, k, c.stride, c.pad, up);
    auto gr = reference::conv2d_backward(x, k, c.stride, c.pad, up);
    CHECK(testing::max_abs_diff(g.input, gr.input) < 1e-10);
    CHECK(testing::max_abs_diff(g.kernels, gr.kernels) < 1e-10);
    CHECK(testing::max_abs_diff(g.bias, gr.bias) < 1e-10);
  }
  const TensorD x = random_tensor<double>(rng, Shape{16, 16, 32});
  const TensorD w = random_tensor<double>(rng, Shape{32, 16});
  const TensorD b = random_tensor<double>(rng, Shape{16});
  CHECK(testing::max_abs_diff(dense_channels_forward(x, w, b),
                              reference::dense_channels_forward(x, w, b)) < 1e-12);
  const TensorD up = random_tensor<double>(rng, Shape{16, 16, 16});
  auto g = dense_channels_backward(x, w, up);
  auto gr = reference::dense_channels_backward(x, w, up);
  CHECK(testing::max_abs_diff(g.input, gr.input) < 1e-12);
  CHECK(testing::max_abs_diff(g.weights, gr.weights) < 1e-12);
  auto p = maxpool2x2_forward(x);
  auto pr = reference::maxpool2x2_forward(x);
  CHECK(p.output == pr.output);
  CHECK(p.argmax == pr.argmax);
}

TEST_CASE("kernels are bit-identical across thread counts") {
  CounterRng rng(101);
  const Tensor x = random_tensor<float>(rng, Shape{64, 64, 32});
  const Tensor k = random_tensor<float>(rng, Shape{3, 3, 32, 32}, -0.2, 0.2);
  const Tensor b = random_tensor<float>(rng, Shape{32});
  const Tensor up = random_tensor<float>(rng, Shape{64, 64, 32});
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Tensor f1 = conv2d_forward(x, k, b, 1, Padding::kSame);
  auto g1 = conv2d_backward(x, k, 1, Padding::kSame, up);
  omp_set_num_threads(4);
  const Tensor f4 = conv2d_forward(x, k, b, 1, Padding::kSame);
  auto g4 = conv2d_backward(x, k, 1, Padding::kSame, up);
  omp_set_num_threads(saved);
  CHECK(f1 == f4);
  CHECK(g1.input == g4.input);
  CHECK(g1.kernels == g4.kernels);
  CHECK(g1.bias == g4.bias);
}

TEST_CASE("channel concat and split are adjoint") {
  CounterRng rng(4);
  const Tensor a = random_tensor<float>(rng, Shape{4, 4, 3});
  const Tensor b = random_tensor<float>(rng, Shape{4, 4, 5});
  const Tensor j = concat_channels(a, b);
  CHECK(j.shape() == Shape{4, 4, 8});
  CHECK(j.at(2, 1, 0) == a.at(2, 1, 0));
  CHECK(j.at(2, 1, 3) == b.at(2, 1, 0));
  Tensor a2, b2;
  split_channels(j, 3, a2, b2);
  CHECK(a2 == a);
  CHECK(b2 == b);
}
