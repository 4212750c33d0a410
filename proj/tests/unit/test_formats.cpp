#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "cgemm/error.hpp"
#include "cgemm/formats.hpp"
#include "oracles.hpp"

using namespace cgemm;
using namespace cgemm::formats;

namespace {

const CompressionScheme kBf8 = CompressionScheme::make(QuantFormat::BF8, 1.0);
const CompressionScheme kFp4 = CompressionScheme::make(QuantFormat::FP4G, 1.0);

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("scheme invariants") {
  CHECK(bits_per_code(QuantFormat::BF16) == 16);
  CHECK(bits_per_code(QuantFormat::BF8) == 8);
  CHECK(bits_per_code(QuantFormat::FP4G) == 4);
  CHECK(kFp4.group_size == 32);
  CHECK(kFp4.scale_bits == 8);
  CHECK(kBf8.group_size == 0);
  CHECK(parse_format("MXFP4") == QuantFormat::FP4G);

  CompressionScheme bad = kBf8;
  bad.density = 0.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidArgument);
  bad = kBf8;
  bad.group_size = 32;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = kFp4;
  bad.group_size = 64;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(parse_format("INT3"), Error);
}

TEST_CASE("compression factor") {
  CHECK(compression_factor(kBf8) == doctest::Approx(16.0 / 9.0));
  CHECK(compression_factor(CompressionScheme::make(QuantFormat::BF8, 0.05)) == doctest::Approx(16.0 / 1.4));
  CHECK(compression_factor(CompressionScheme::make(QuantFormat::BF16, 1.0)) == doctest::Approx(16.0 / 17.0));
  CHECK(compression_factor(CompressionScheme::uncompressed_bf16()) == 1.0);
  CHECK(compression_factor_exact(8, {1, 1}) == Fraction{16, 9});
  CHECK(compression_factor_exact(8, {1, 20}) == Fraction{80, 7});
  CHECK(compression_factor_exact(4, {1, 2}) == Fraction{16, 3});
}

TEST_CASE("bytes per tile") {
  CHECK(bytes_per_tile(kBf8) == 576);
  CHECK(bytes_per_tile(kFp4) == 336);
  CHECK(bytes_per_tile(CompressionScheme::uncompressed_bf16()) == 1024);
  CHECK(bytes_per_tile(CompressionScheme::make(QuantFormat::BF8, 0.05)) == 26 + 64);
  CHECK(bytes_per_tile(CompressionScheme::make(QuantFormat::BF16, 0.3)) == 308 + 64);

  // The paper-formula footprint is bytes_per_tile without scale bytes.
  for (int bits : {4, 8, 16}) {
    const auto fmt = bits == 4 ? QuantFormat::FP4G : bits == 8 ? QuantFormat::BF8 : QuantFormat::BF16;
    const auto s = CompressionScheme::make(fmt, 1.0);
    const auto scale_bytes = static_cast<std::size_t>(s.groups_per_tile());
    const Fraction cf = compression_factor_exact(bits, {1, 1});
    CHECK(bytes_per_tile(s) - scale_bytes == static_cast<std::size_t>(1024 * cf.den / cf.num));
  }

  // An empty tile costs only its bitmask.
  const auto empty = compress_tile(DenseTile{}, kBf8);
  CHECK(empty.bitmask.popcount() == 0);
  CHECK(empty.codes.empty());
}

TEST_CASE("BF8 decode matches the E5M2 definition for every code") {
  for (int c = 0; c < 256; ++c) {
    const double want = oracle::e5m2(static_cast<std::uint8_t>(c));
    const Bf16 got = dequantize_value(static_cast<std::uint16_t>(c), kBf8);
    if (std::isnan(want)) {
      CHECK(got.is_nan());
    } else {
      CHECK(got == Bf16::from_float(static_cast<float>(want)));
      CHECK(static_cast<double>(got.to_float()) == want);
    }
  }
  CHECK(dequantize_value(0, kBf8) == Bf16{});
}

TEST_CASE("FP4G decode matches the E2M1 value set") {
  for (int c = 0; c < 16; ++c) {
    CHECK(static_cast<double>(dequantize_value(static_cast<std::uint16_t>(c), kFp4).to_float()) ==
          oracle::e2m1(static_cast<std::uint8_t>(c)));
  }
  CHECK(dequantize_value(0b0111, kFp4).to_float() == 6.0f);
}

TEST_CASE("quantization agrees with a brute-force nearest-code search") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> bits(0, 0xFFFF);
  for (const auto& scheme : {kBf8, kFp4}) {
    for (int i = 0; i < 20000; ++i) {
      const Bf16 x = Bf16::from_bits(static_cast<std::uint16_t>(bits(rng)));
      if (x.is_nan() || std::isinf(x.to_float())) continue;
      CHECK(quantize_value(x, scheme) == oracle::quantize(x.to_float(), scheme.format));
    }
  }
  // Midpoints between neighbours go to the smaller magnitude.
  CHECK(quantize_value(Bf16::from_float(2.5f), kFp4) == 0b0100);
  CHECK(quantize_value(Bf16::from_float(-5.0f), kFp4) == 0b1110);
  CHECK(quantize_value(Bf16::from_float(1.125f), kBf8) == quantize_value(Bf16::from_float(1.0f), kBf8));
}

TEST_CASE("quantization examples and saturation") {
  CHECK(quantize_value(Bf16{}, kBf8) == 0);
  CHECK(quantize_value(Bf16{}, kFp4) == 0);
  const std::uint8_t scale = kUnitScale + 3;
  CHECK(quantize_value(Bf16::from_float(48.0f), kFp4, scale) == 0b0111);
  const auto c = quantize_value(Bf16::from_float(1.5f), kBf8);
  CHECK(dequantize_value(c, kBf8).to_float() == 1.5f);

  std::size_t sat = 0;
  CHECK(quantize_value(Bf16::from_float(1e6f), kBf8, kUnitScale, &sat) == 0x7B);
  CHECK(quantize_value(Bf16::from_float(-100.0f), kFp4, kUnitScale, &sat) == 0xF);
  CHECK(sat == 2);
  CHECK(quantize_value(Bf16::from_bits(0x7FC1), kBf8) == 0x7F);
  CHECK(quantize_value(Bf16::from_bits(0xFFC1), kBf8) == 0xFF);
}

TEST_CASE("quantize inverts dequantize on every finite code") {
  for (int c = 0; c < 256; ++c) {
    const Bf16 v = dequantize_value(static_cast<std::uint16_t>(c), kBf8);
    if (std::isinf(v.to_float()) || v.is_nan()) continue;
    CHECK(quantize_value(v, kBf8) == c);
  }
  for (int c = 0; c < 16; ++c) CHECK(quantize_value(dequantize_value(static_cast<std::uint16_t>(c), kFp4), kFp4) == c);
}

TEST_CASE("group scale is the smallest power of two fitting the E2M1 range") {
  for (float m : {6.0f, 6.5f, 0.75f, 1e-3f, 12.0f, 3000.0f}) {
    const int e = static_cast<int>(choose_group_scale(m)) - kUnitScale;
    CHECK(m / std::ldexp(1.0f, e) <= 6.0f);
    CHECK(m / std::ldexp(1.0f, e - 1) > 6.0f);
  }
  CHECK(choose_group_scale(0.0f) == kUnitScale);
  CHECK(apply_scale(Bf16::from_float(1.5f), kUnitScale + 2).to_float() == 6.0f);
}

TEST_CASE("LUT contents") {
  const auto bf8 = build_lut(kBf8);
  CHECK(bf8.effective_size == 256);
  for (int c = 0; c < 256; ++c) CHECK(bf8.entries[static_cast<std::size_t>(c)].bits == dequantize_value(static_cast<std::uint16_t>(c), kBf8).bits);

  const auto fp4 = build_lut(kFp4);
  CHECK(fp4.effective_size == 16);
  for (int i = 0; i < 256; ++i) CHECK(fp4.entries[static_cast<std::size_t>(i)] == fp4.entries[static_cast<std::size_t>(i % 16)]);

  CHECK(code_of([] { build_lut(CompressionScheme::make(QuantFormat::BF16, 1.0)); }) == ErrorCode::kUnsupported);
}

TEST_CASE("compress_tile examples") {
  DenseTile one{};
  one[0] = Bf16::from_float(0.75f);
  const auto t = compress_tile(one, kBf8);
  CHECK(t.bitmask.popcount() == 1);
  CHECK(t.bitmask.test(0));
  REQUIRE(t.codes.size() == 1);
  CHECK(t.codes[0] == quantize_value(one[0], kBf8));

  std::mt19937_64 rng(3);
  const auto half = compress_tile(oracle::random_tile(rng, 0.0), CompressionScheme::make(QuantFormat::BF8, 0.5));
  CHECK(half.bitmask.popcount() == 256);
  CHECK(half.codes.size() == 256);

  const auto fp4 = compress_tile(oracle::random_tile(rng), kFp4);
  CHECK(fp4.scales.size() == 16);
}

TEST_CASE("pruning ties keep the lower index and NaN ranks highest") {
  DenseTile t{};
  for (int i = 0; i < 10; ++i) t[static_cast<std::size_t>(i)] = Bf16::from_float(1.0f);
  t[100] = Bf16::from_bits(0x7FC0);
  const auto s = CompressionScheme::make(QuantFormat::BF8, 4.0 / 512.0);
  CompressStats stats;
  const auto c = compress_tile(t, s, &stats);
  CHECK(c.bitmask.popcount() == 4);
  CHECK(c.bitmask.test(0));
  CHECK(c.bitmask.test(1));
  CHECK(c.bitmask.test(2));
  CHECK(c.bitmask.test(100));
  CHECK_FALSE(c.bitmask.test(3));
  CHECK(stats.nan_inputs == 1);
}

TEST_CASE("structural corruption") {
  DenseTile t{};
  t[0] = Bf16::from_float(1.0f);
  t[1] = Bf16::from_float(2.0f);
  t[2] = Bf16::from_float(3.0f);
  auto c = compress_tile(t, kBf8);
  c.codes.pop_back();
  CHECK(code_of([&] { decompress_tile(c, kBf8); }) == ErrorCode::kStructuralCorruption);

  auto f = compress_tile(t, kFp4);
  f.scales.pop_back();
  CHECK(code_of([&] { check_tile(f, kFp4); }) == ErrorCode::kStructuralCorruption);
  f = compress_tile(t, kFp4);
  f.codes[0] = 16;
  CHECK(code_of([&] { check_tile(f, kFp4); }) == ErrorCode::kStructuralCorruption);
}

TEST_CASE("dense BF16 round trip is lossless") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto t = oracle::random_tile(rng);
    for (const auto& s : {CompressionScheme::make(QuantFormat::BF16, 1.0), CompressionScheme::uncompressed_bf16()}) {
      CHECK(decompress_tile(compress_tile(t, s), s) == t);
    }
  }
}

TEST_CASE("round trip matches the per-element oracle") {
  std::mt19937_64 rng(5);
  for (auto fmt : {QuantFormat::BF8, QuantFormat::FP4G, QuantFormat::BF16}) {
    for (double d : {0.05, 0.3, 0.5, 1.0}) {
      const auto s = CompressionScheme::make(fmt, d);
      for (int trial = 0; trial < 20; ++trial) {
        const auto t = oracle::random_tile(rng);
        const auto c = compress_tile(t, s);
        const auto out = decompress_tile(c, s);
        const auto kept = oracle::pruned_pattern(t, d);
        CHECK(c.bitmask.popcount() == static_cast<int>(kept.size()));
        CHECK(c.codes.size() == kept.size());

        double group_max[16] = {};
        for (int i : kept) {
          auto& g = group_max[i / 32];
          g = std::max(g, static_cast<double>(std::fabs(t[static_cast<std::size_t>(i)].to_float())));
        }
        std::size_t k = 0;
        for (int i = 0; i < kTileElems; ++i) {
          const bool on = k < kept.size() && kept[k] == i;
          CHECK(c.bitmask.test(i) == on);
          if (!on) {
            CHECK(out[static_cast<std::size_t>(i)] == Bf16{});
            continue;
          }
          ++k;
          const double x = t[static_cast<std::size_t>(i)].to_float();
          Bf16 want;
          if (fmt == QuantFormat::BF16) {
            want = t[static_cast<std::size_t>(i)];
          } else if (fmt == QuantFormat::BF8) {
            want = Bf16::from_float(static_cast<float>(oracle::e5m2(static_cast<std::uint8_t>(oracle::quantize(x, fmt)))));
          } else {
            int e = -127;
            while (group_max[i / 32] > 6.0 * std::ldexp(1.0, e)) ++e;
            const auto code = oracle::quantize(x / std::ldexp(1.0, e), fmt);
            want = Bf16::from_float(static_cast<float>(oracle::e2m1(static_cast<std::uint8_t>(code)) * std::ldexp(1.0, e)));
          }
          CHECK(out[static_cast<std::size_t>(i)] == want);
        }
      }
    }
  }
}

TEST_CASE("LUT decompression equals the scalar path") {
  std::mt19937_64 rng(9);
  for (auto fmt : {QuantFormat::BF8, QuantFormat::FP4G}) {
    for (double d : {0.1, 0.7, 1.0}) {
      const auto s = CompressionScheme::make(fmt, d);
      const auto lut = build_lut(s);
      for (int i = 0; i < 20; ++i) {
        const auto c = compress_tile(oracle::random_tile(rng), s);
        CHECK(decompress_tile(c, s, lut) == decompress_tile(c, s));
      }
    }
  }
  const auto bf16 = CompressionScheme::make(QuantFormat::BF16, 1.0);
  CHECK(code_of([&] { decompress_tile(compress_tile(DenseTile{}, bf16), bf16, DequantLut{}); }) ==
        ErrorCode::kUnsupported);
}

TEST_CASE("mask window counts") {
  TileMask m;
  for (int i = 0; i < kTileElems; i += 3) m.set(i);
  for (int w : {8, 16, 32, 64, 128}) {
    int total = 0;
    for (int b = 0; b < kTileElems; b += w) {
      int n = 0;
      for (int i = b; i < b + w; ++i) n += m.test(i) ? 1 : 0;
      CHECK(m.count_range(b, w) == n);
      total += n;
    }
    CHECK(total == m.popcount());
  }
  CHECK(TileMask::all_ones().popcount() == 512);
}
