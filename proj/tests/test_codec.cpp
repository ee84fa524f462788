#include <doctest.h>

#include <queue>

#include "rdae/bitstream.hpp"
#include "rdae/codec.hpp"
#include "rdae/huffman.hpp"
#include "rdae/model_io.hpp"
#include "rdae/quantizer.hpp"
#include "support.hpp"

using namespace rdae;

namespace {

// Optimal expected code length of an unrestricted binary prefix code: the
// sum of all merge weights of the Huffman procedure divided by the total.
double optimal_mean_length(const std::array<std::uint64_t, 256>& hist) {
  std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> q;
  std::uint64_t total = 0;
  for (auto h : hist)
    if (h > 0) {
      q.push(h);
      total += h;
    }
  if (q.size() == 1) return 1.0;
  std::uint64_t cost = 0;
  while (q.size() > 1) {
    const auto a = q.top();
    q.pop();
    const auto b = q.top();
    q.pop();
    cost += a + b;
    q.push(a + b);
  }
  return static_cast<double>(cost) / static_cast<double>(total);
}

std::vector<std::uint8_t> random_symbols(CounterRng& rng, std::size_t n, int alphabet) {
  std::vector<std::uint8_t> s(n);
  // Skewed draw: squares of uniforms favour small symbols.
  for (auto& v : s) {
    const double u = rng.uniform();
    v = static_cast<std::uint8_t>(static_cast<int>(u * u * alphabet) % 256);
  }
  return s;
}

}  // namespace

TEST_CASE("quantizer") {
  SUBCASE("constant input") {
    const std::vector<float> c(4096, 2.5f);
    const auto q = quantize(c);
    for (auto s : q.symbols) CHECK(s == 0);
    CHECK(q.spec.scale == QuantSpec::kMinScale);
    for (float v : dequantize(q.symbols, q.spec)) CHECK(v == 2.5f);
  }
  SUBCASE("endpoints map exactly") {
    const std::vector<float> v = {0.0f, 1.0f, 1.0f, 0.0f};
    const auto q = quantize(v);
    CHECK(q.symbols == std::vector<std::uint8_t>{0, 255, 255, 0});
    CHECK(dequantize(q.symbols, q.spec) == v);
  }
  SUBCASE("random values in [0, 10] stay within half a step") {
    CounterRng rng(3);
    std::vector<float> v(4096);
    for (auto& x : v) x = static_cast<float>(rng.uniform(0, 10));
    v[0] = 0.0f;
    v[1] = 10.0f;
    const auto q = quantize(v);
    CHECK(q.spec.scale == doctest::Approx(10.0 / 255));
    const auto back = dequantize(q.symbols, q.spec);
    double worst = 0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, double(std::abs(back[i] - v[i])));
    CHECK(worst <= 10.0 / (2 * 255) + 1e-6);
  }
  SUBCASE("half steps round away from zero") {
    // min 0, max 255: scale 1, so 0.5 -> 1 and 1.5 -> 2.
    const std::vector<float> v = {0.0f, 0.5f, 1.5f, 255.0f};
    CHECK(quantize(v).symbols == std::vector<std::uint8_t>{0, 1, 2, 255});
  }
  SUBCASE("latent overloads validate size") {
    CHECK_THROWS_AS(dequantize_latent(std::vector<std::uint8_t>(100), QuantSpec{}), Error);
    QuantSpec bad;
    bad.scale = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("huffman basics") {
  SUBCASE("uniform histogram gives 8-bit codes") {
    std::array<std::uint64_t, 256> h;
    h.fill(10);
    const auto t = HuffmanTable::build(h);
    CHECK(t.mean_code_length(h) == 8.0);
    CHECK(t.kraft_sum_scaled() == (std::uint64_t{1} << 32));
  }
  SUBCASE("single symbol") {
    const std::vector<std::uint8_t> s(4096, 17);
    const auto h = histogram(s);
    const auto t = HuffmanTable::build(h);
    CHECK(t.length(17) == 1);
    const auto bits = huffman_encode(s, t);
    CHECK(bits.size() == 4096 / 8);
    CHECK(huffman_decode(bits, t, s.size()) == s);
    CHECK(HuffmanTable::from_lengths(t.lengths()) == t);
  }
  SUBCASE("absent symbol at encode") {
    const std::vector<std::uint8_t> s = {1, 2, 3};
    const auto t = HuffmanTable::build(histogram(s));
    try {
      huffman_encode(std::vector<std::uint8_t>{4}, t);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kSymbol);
    }
  }
  SUBCASE("truncated bits at decode") {
    const std::vector<std::uint8_t> s = {1, 2, 3, 1, 1, 1, 2, 3, 3, 3, 0, 0, 9};
    const auto t = HuffmanTable::build(histogram(s));
    auto bits = huffman_encode(s, t);
    bits.pop_back();
    try {
      huffman_decode(bits, t, s.size());
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kTruncated);
    }
  }
  SUBCASE("canonical assignment") {
    // lengths a:1 b:2 c:3 d:3 -> 0, 10, 110, 111
    std::array<std::uint8_t, 256> len{};
    len['a'] = 1;
    len['b'] = 2;
    len['c'] = 3;
    len['d'] = 3;
    const auto t = HuffmanTable::from_lengths(len);
    CHECK(t.code('a') == 0b0);
    CHECK(t.code('b') == 0b10);
    CHECK(t.code('c') == 0b110);
    CHECK(t.code('d') == 0b111);
    len['d'] = 0;  // incomplete code
    CHECK_THROWS_AS(HuffmanTable::from_lengths(len), Error);
  }
  SUBCASE("length limit") {
    // Fibonacci weights force a depth-40 tree without the limit.
    std::array<std::uint64_t, 256> h{};
    std::uint64_t a = 1, b = 1;
    for (int i = 0; i < 42; ++i) {
      h[i] = a;
      const auto c = a + b;
      a = b;
      b = c;
    }
    const auto t = HuffmanTable::build(h);
    int max_len = 0;
    for (auto l : t.lengths()) max_len = std::max<int>(max_len, l);
    CHECK(max_len <= 32);
    CHECK(t.kraft_sum_scaled() == (std::uint64_t{1} << 32));
    std::vector<std::uint8_t> s;
    for (int i = 0; i < 42; ++i) s.push_back(static_cast<std::uint8_t>(i));
    CHECK(huffman_decode(huffman_encode(s, t), t, s.size()) == s);
  }
}

TEST_CASE("huffman matches the optimal mean length on random histograms") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    CounterRng rng(CounterRng::derive(17, trial));
    const auto s = random_symbols(rng, 1 + rng.below(5000), 1 + static_cast<int>(rng.below(256)));
    const auto h = histogram(s);
    const auto t = HuffmanTable::build(h);
    CHECK(t.mean_code_length(h) == doctest::Approx(optimal_mean_length(h)).epsilon(1e-12));
    CHECK(huffman_decode(huffman_encode(s, t), t, s.size()) == s);
    const bool single = std::count_if(h.begin(), h.end(), [](auto v) { return v > 0; }) == 1;
    CHECK(t.kraft_sum_scaled() == (single ? std::uint64_t{1} << 31 : std::uint64_t{1} << 32));
  }
}

namespace {

Tensor test_image(std::uint64_t seed) {
  CounterRng rng(seed);
  return testing::random_tensor<float>(rng, image_shape(), 0, 1);
}

}  // namespace

TEST_CASE("codec round trips") {
  const DualModel model = DualModel::initialize(5);
  const Codec codec(model);
  const Tensor x = test_image(1);

  SUBCASE("raw mode sizes") {
    const Bitstream s = codec.compress(x);
    CHECK(s.payload[0].size() == 4096);
    CHECK(s.payload[1].size() == 4096);
    const auto bytes = serialize(s);
    CHECK(bytes.size() == Bitstream::kFixedHeaderBytes + 8192 + Bitstream::kCrcBytes);
    const StreamStats st = stream_stats(s);
    CHECK(st.payload_bytes == 8192);
    CHECK(st.payload_ratio == 6.0);
    CHECK(st.bpp == doctest::Approx(bytes.size() * 8.0 / 16384));
  }
  SUBCASE("parse(serialize) identity and deterministic bytes") {
    for (bool huff : {false, true})
      for (auto mode : {ReconstructionMode::kFused, ReconstructionMode::kAdditive}) {
        const Bitstream s = codec.compress(x, {huff, mode});
        const auto bytes = serialize(s);
        CHECK(parse_bitstream(bytes) == s);
        CHECK(serialize(codec.compress(x, {huff, mode})) == bytes);
        const Tensor out = codec.decompress(parse_bitstream(bytes));
        CHECK(out.shape() == image_shape());
        CHECK(codec.decompress(s) == out);
        CHECK(s.huffman() == huff);
        CHECK(s.additive() == (mode == ReconstructionMode::kAdditive));
      }
  }
  SUBCASE("huffman and raw decode to the same image") {
    CHECK(codec.decompress(codec.compress(x, {true, ReconstructionMode::kFused})) ==
          codec.decompress(codec.compress(x, {false, ReconstructionMode::kFused})));
  }
  SUBCASE("decoded latents equal dequantized analysis") {
    const LatentPair lp = analyze(x, model);
    const LatentPair dl = codec.decode_latents(codec.compress(x));
    const auto q1 = quantize(lp.ls1);
    CHECK(dl.ls1 == dequantize_latent(q1.symbols, q1.spec));
  }
  SUBCASE("wrong model") {
    const DualModel other = DualModel::initialize(6);
    const Bitstream s = codec.compress(x);
    try {
      Codec(other).decompress(s);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kModelMismatch);
    }
  }
  SUBCASE("m1_only is not a stream mode") {
    CHECK_THROWS_AS(codec.compress(x, {false, ReconstructionMode::kM1Only}), Error);
  }
}

TEST_CASE("bitstream corruption is always detected") {
  const DualModel model = DualModel::initialize(8);
  const Codec codec(model);
  for (bool huff : {false, true}) {
    const auto bytes = serialize(codec.compress(test_image(2), {huff, ReconstructionMode::kFused}));
    CounterRng rng(huff ? 2 : 1);
    int rejected = 0;
    const int trials = 300;
    for (int i = 0; i < trials; ++i) {
      auto bad = bytes;
      const std::size_t pos = rng.below(bad.size());
      bad[pos] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      try {
        codec.decompress(parse_bitstream(bad));
      } catch (const Error&) {
        ++rejected;
      }
    }
    CHECK(rejected == trials);
  }
  const auto bytes = serialize(codec.compress(test_image(3)));
  try {
    parse_bitstream(std::span(bytes).first(10));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTruncated);
    CHECK(std::string(e.what()).find("stream channels") != std::string::npos);
  }
  auto future = bytes;
  future[4] = 9;
  try {
    parse_bitstream(future);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kVersion);
  }
}
