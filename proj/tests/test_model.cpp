#include <doctest.h>

#include <cmath>

#include "rdae/bytes.hpp"
#include "rdae/model.hpp"
#include "rdae/model_io.hpp"
#include "support.hpp"

using namespace rdae;

namespace {

Tensor random_image(std::uint64_t seed) {
  CounterRng rng(seed);
  return testing::random_tensor<float>(rng, image_shape(), 0, 1);
}

template <typename Params>
void zero_all(Params& p) {
  p.for_each_param([](Param<float>& q) { q.value.fill(0.0f); });
}

}  // namespace

TEST_CASE("encoder and decoder shape algebra") {
  const DualModel m = DualModel::initialize(3);
  const Latent z = encode(random_image(1), m.m1_encoder);
  CHECK(z.tensor().shape() == Shape{16, 16, 16});
  for (float v : z.tensor().data()) CHECK(v >= 0.0f);
  const Tensor out = decode(z, m.m1_decoder);
  CHECK(out.shape() == Shape{128, 128, 3});
  for (float v : out.data()) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK_THROWS_AS(encode(Tensor(Shape{64, 64, 3}), m.m1_encoder), Error);
  CHECK_THROWS_AS(Latent(Tensor(Shape{16, 16, 8})), Error);
}

TEST_CASE("closed-form outputs") {
  DualModel m = DualModel::initialize(4);
  SUBCASE("zero image through zero biases gives a zero latent") {
    const Latent z = encode(Tensor(image_shape()), m.m1_encoder);
    for (float v : z.tensor().data()) CHECK(v == 0.0f);
  }
  SUBCASE("all-zero decoder gives uniform 0.5") {
    zero_all(m.m1_decoder);
    CounterRng rng(8);
    const Tensor out = decode(Latent(testing::random_tensor<float>(rng, latent_shape(), 0, 2)), m.m1_decoder);
    for (float v : out.data()) CHECK(v == 0.5f);
  }
}

TEST_CASE("initialization") {
  const DualModel a = DualModel::initialize(42);
  const DualModel b = DualModel::initialize(42);
  const DualModel c = DualModel::initialize(43);
  CHECK(serialize_model(a) == serialize_model(b));
  CHECK(serialize_model(a) != serialize_model(c));
  // He-uniform bound for the first conv: sqrt(6 / (3*3*3)).
  const double he = std::sqrt(6.0 / 27.0);
  double max_abs = 0;
  for (float v : a.m1_encoder.conv1.kernels.value.data()) max_abs = std::max(max_abs, double(std::abs(v)));
  CHECK(max_abs <= he);
  CHECK(max_abs > 0.9 * he);
  // Glorot-uniform bound for the sigmoid output conv: sqrt(6 / (9*64 + 9*3)).
  const double glorot = std::sqrt(6.0 / (9.0 * 64 + 9.0 * 3));
  max_abs = 0;
  for (float v : a.m1_decoder.out.kernels.value.data()) max_abs = std::max(max_abs, double(std::abs(v)));
  CHECK(max_abs <= glorot);
  CHECK(max_abs > 0.9 * glorot);
  a.for_each_param([](const Param<float>& p) {
    if (p.value.shape().rank() == 1) {
      for (float v : p.value.data()) CHECK(v == 0.0f);
    }
  });
  // Fusion maps 32 -> 16 channels.
  CHECK(a.m3_fusion.conv.kernels.value.shape() == Shape{3, 3, 32, 16});
}

TEST_CASE("residual scaling") {
  const Tensor x = random_image(3);
  const Tensor r0 = residual_scaled(x, x);
  for (float v : r0.data()) CHECK(v == 0.5f);
  const Tensor one = residual_scaled(Tensor(image_shape(), 1.0f), Tensor(image_shape(), 0.0f));
  for (float v : one.data()) CHECK(v == 1.0f);  // clamped from 0.5 + 128/255
  const Tensor low = residual_scaled(Tensor(image_shape(), 0.2f), Tensor(image_shape(), 0.9f));
  for (float v : low.data()) CHECK(v == doctest::Approx(0.5 - 0.7 * 128.0 / 255.0));

  // Round trip on residuals inside the unclamped band |r| <= 0.5 * 255/128.
  const Tensor y = random_image(4);
  Tensor orig(image_shape()), inter(image_shape()), expect(image_shape());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    orig[i] = 0.25f + 0.5f * x[i];
    inter[i] = 0.25f + 0.5f * y[i];
    expect[i] = orig[i] - inter[i];
  }
  const Tensor back = residual_unscaled(residual_scaled(orig, inter));
  CHECK(testing::max_abs_diff(back, expect) < 1e-6);
}

TEST_CASE("fusion, additive path and analysis") {
  const DualModel m = DualModel::initialize(6);
  const Tensor x = random_image(9);
  const LatentPair lp = analyze(x, m);
  const Tensor fused = fuse_and_decode(lp.ls1, lp.ls2, m.m3_fusion, m.m3_decoder);
  CHECK(fused.shape() == image_shape());
  CHECK(synthesize(lp, m, ReconstructionMode::kFused) == fused);
  CHECK(synthesize(lp, m, ReconstructionMode::kM1Only) == decode(lp.ls1, m.m1_decoder));

  // Order matters: swapping the latents changes the fused output.
  CHECK(fuse_and_decode(lp.ls2, lp.ls1, m.m3_fusion, m.m3_decoder) != fused);

  // LS2 decoding to uniform 0.5 (zero residual) leaves decode(LS1) intact.
  DualModel z = m;
  zero_all(z.m2_decoder);
  CHECK(additive_reconstruct(lp.ls1, lp.ls2, z) == decode(lp.ls1, z.m1_decoder));
  const Tensor add = additive_reconstruct(lp.ls1, lp.ls2, m);
  for (float v : add.data()) CHECK((v >= 0.0f && v <= 1.0f));

  // Determinism.
  const LatentPair again = analyze(x, m);
  CHECK(again.ls1 == lp.ls1);
  CHECK(again.ls2 == lp.ls2);
  CHECK(parse_mode("fused") == ReconstructionMode::kFused);
  CHECK(parse_mode("m1_only") == ReconstructionMode::kM1Only);
  CHECK(parse_mode("additive") == ReconstructionMode::kAdditive);
  CHECK_THROWS_AS(parse_mode("bogus"), Error);
}

TEST_CASE("compression arithmetic") {
  CHECK(kLatentValues == 4096);
  CHECK(kImageValues == 49152);
  CHECK(kImageValues % (2 * kLatentValues) == 0);
  CHECK(kImageValues / (2 * kLatentValues) == 6);
  CHECK(kImageValues / kLatentValues == 12);
}

TEST_CASE("model file round trip and integrity") {
  DualModel m = DualModel::initialize(12);
  m.trained_phases = kPhaseM1 | kPhaseM2;
  const std::vector<std::uint8_t> bytes = serialize_model(m);
  const DualModel back = parse_model(bytes);
  CHECK(serialize_model(back) == bytes);
  CHECK(back.seed == 12);
  CHECK(back.trained_phases == (kPhaseM1 | kPhaseM2));
  bool same = true;
  std::vector<const Tensor*> lhs, rhs;
  m.for_each_param([&](const Param<float>& p) { lhs.push_back(&p.value); });
  back.for_each_param([&](const Param<float>& p) { rhs.push_back(&p.value); });
  REQUIRE(lhs.size() == rhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) same = same && (*lhs[i] == *rhs[i]);
  CHECK(same);

  SUBCASE("with whitening") {
    WhiteningTransform w;
    w.mean = {0.1, 0.2, 0.3};
    w.matrix = {2, 0, 0, 0, 3, 0, 0, 0, 4};
    w.inverse = {0.5, 0, 0, 0, 1.0 / 3, 0, 0, 0, 0.25};
    m.whitening = w;
    const DualModel wb = parse_model(serialize_model(m));
    REQUIRE(wb.whitening.has_value());
    CHECK(*wb.whitening == w);
  }
  SUBCASE("payload byte flip") {
    auto bad = bytes;
    bad[bad.size() / 2] ^= 0x01;
    try {
      parse_model(bad);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kChecksum);
    }
  }
  SUBCASE("future version") {
    auto bad = bytes;
    bad[4] = DualModel::kFormatVersion + 1;
    try {
      parse_model(bad);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kVersion);
    }
  }
  SUBCASE("truncated") {
    auto bad = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + bytes.size() / 3);
    try {
      parse_model(bad);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kTruncated);
    }
  }
  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse_model(bad), Error);
  }
  SUBCASE("file helpers") {
    testing::TempDir dir("model");
    save_model(m, dir.str("m.rdam"));
    CHECK(serialize_model(load_model(dir.str("m.rdam"))) == bytes);
    CHECK(model_checksum(m) == model_checksum(back));
    try {
      load_model(dir.str("missing.rdam"));
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kIo);
    }
  }
}
