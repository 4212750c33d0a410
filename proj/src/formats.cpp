#include "cgemm/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cgemm/error.hpp"

namespace cgemm::formats {
namespace {

// ceil() that forgives binary noise in products like 512 * 0.3.
std::int64_t ceil_tolerant(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) < 1e-9) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

float decode_e5m2(std::uint8_t c) {
  const int exp = (c >> 2) & 0x1F;
  const int man = c & 0x3;
  float v;
  if (exp == 0x1F) {
    v = man == 0 ? INFINITY : NAN;
  } else if (exp == 0) {
    v = std::ldexp(static_cast<float>(man), -16);
  } else {
    v = std::ldexp(static_cast<float>(4 + man), exp - 17);
  }
  return (c & 0x80) ? -v : v;
}

float decode_e2m1(std::uint8_t c) {
  const int exp = (c >> 1) & 0x3;
  const int man = c & 0x1;
  const float v = exp == 0 ? 0.5f * static_cast<float>(man)
                           : std::ldexp(static_cast<float>(2 + man), exp - 2);
  return (c & 0x8) ? -v : v;
}

// Non-negative finite magnitudes, indexed by the unsigned part of the code.
// Both minifloat encodings are monotone in their low bits.
const std::vector<double>& magnitude_table(QuantFormat format) {
  static const std::vector<double> bf8 = [] {
    std::vector<double> t;
    for (int c = 0; c < 0x7C; ++c) t.push_back(decode_e5m2(static_cast<std::uint8_t>(c)));
    return t;
  }();
  static const std::vector<double> fp4 = [] {
    std::vector<double> t;
    for (int c = 0; c < 8; ++c) t.push_back(decode_e2m1(static_cast<std::uint8_t>(c)));
    return t;
  }();
  return format == QuantFormat::BF8 ? bf8 : fp4;
}

std::uint16_t sign_bit(QuantFormat format) {
  return format == QuantFormat::BF8 ? 0x80 : 0x8;
}

}  // namespace

int bits_per_code(QuantFormat format) noexcept {
  switch (format) {
    case QuantFormat::BF16: return 16;
    case QuantFormat::BF8: return 8;
    case QuantFormat::FP4G: return 4;
  }
  return 0;
}

std::string_view format_name(QuantFormat format) noexcept {
  switch (format) {
    case QuantFormat::BF16: return "BF16";
    case QuantFormat::BF8: return "BF8";
    case QuantFormat::FP4G: return "FP4G";
  }
  return "?";
}

QuantFormat parse_format(std::string_view name) {
  if (name == "BF16") return QuantFormat::BF16;
  if (name == "BF8") return QuantFormat::BF8;
  if (name == "FP4G" || name == "MXFP4") return QuantFormat::FP4G;
  fail(ErrorCode::kInvalidArgument, "unknown quantization format '" + std::string(name) + "'");
}

CompressionScheme CompressionScheme::make(QuantFormat format, double density) {
  CompressionScheme s;
  s.format = format;
  s.density = density;
  if (format == QuantFormat::FP4G) {
    s.group_size = 32;
    s.scale_bits = 8;
  }
  return s;
}

CompressionScheme CompressionScheme::uncompressed_bf16() {
  CompressionScheme s = make(QuantFormat::BF16, 1.0);
  s.bitmask = false;
  return s;
}

void CompressionScheme::validate() const {
  require(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
  if (format == QuantFormat::FP4G) {
    require(group_size == 32 && scale_bits == 8, "FP4G requires group_size 32 and scale_bits 8");
  } else {
    require(group_size == 0 && scale_bits == 0, "only FP4G carries group scales");
  }
  require(group_size == 0 || kTileElems % group_size == 0, "group_size must divide 512");
  if (!bitmask) {
    require(format == QuantFormat::BF16 && density == 1.0,
            "the mask-free layout is only defined for dense BF16");
  }
}

std::string CompressionScheme::label() const {
  std::string out(format_name(format));
  if (density < 1.0) {
    const double pct = density * 100.0;
    const double r = std::round(pct);
    char buf[32];
    if (std::fabs(pct - r) < 1e-9) {
      std::snprintf(buf, sizeof buf, "_%d%%", static_cast<int>(r));
    } else {
      std::snprintf(buf, sizeof buf, "_%g%%", pct);
    }
    out += buf;
  } else if (bitmask && format == QuantFormat::BF16) {
    out += "_masked";
  }
  return out;
}

int kept_elements(double density) noexcept {
  return static_cast<int>(std::clamp<std::int64_t>(ceil_tolerant(kTileElems * density), 0, kTileElems));
}

Fraction reduce(Fraction f) {
  const std::int64_t g = std::gcd(f.num, f.den);
  if (g != 0) {
    f.num /= g;
    f.den /= g;
  }
  if (f.den < 0) {
    f.num = -f.num;
    f.den = -f.den;
  }
  return f;
}

double compression_factor(const CompressionScheme& scheme) {
  scheme.validate();
  if (!scheme.bitmask) return 1.0;
  return 16.0 / (scheme.bits() * scheme.density + 1.0);
}

Fraction compression_factor_exact(int bits, Fraction density) {
  require(density.den > 0 && density.num > 0 && density.num <= density.den, "density must lie in (0, 1]");
  // 16 / (bits * n/m + 1) = 16 m / (bits n + m)
  return reduce({16 * density.den, bits * density.num + density.den});
}

std::size_t bytes_per_tile(const CompressionScheme& scheme) {
  scheme.validate();
  if (!scheme.bitmask) return static_cast<std::size_t>(kTileElems * 2);
  const auto code_bytes = ceil_tolerant(kTileElems * scheme.density * scheme.bits() / 8.0);
  const auto scale_bytes = scheme.grouped() ? scheme.groups_per_tile() * (scheme.scale_bits / 8) : 0;
  return static_cast<std::size_t>(code_bytes + kBitmaskBytes + scale_bytes);
}

int TileMask::popcount() const noexcept {
  int n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

int TileMask::count_range(int begin, int width) const noexcept {
  int n = 0;
  int i = begin;
  const int end = begin + width;
  while (i < end) {
    const int word = i >> 6;
    const int off = i & 63;
    const int take = std::min(64 - off, end - i);
    std::uint64_t bits = words_[static_cast<std::size_t>(word)] >> off;
    if (take < 64) bits &= (std::uint64_t{1} << take) - 1;
    n += std::popcount(bits);
    i += take;
  }
  return n;
}

TileMask TileMask::all_ones() noexcept {
  TileMask m;
  m.words_.fill(~std::uint64_t{0});
  return m;
}

std::uint16_t quantize_value(Bf16 x, const CompressionScheme& scheme, std::uint8_t group_scale,
                             std::size_t* saturations) {
  if (scheme.format == QuantFormat::BF16) return x.bits;
  if (scheme.grouped()) require(group_scale != 0xFF, "group scale must be a finite power of two");

  const auto& table = magnitude_table(scheme.format);
  const auto max_index = static_cast<std::uint16_t>(table.size() - 1);
  const std::uint16_t sign = x.sign() ? sign_bit(scheme.format) : 0;

  if (x.is_nan()) {
    if (scheme.format == QuantFormat::BF8) return static_cast<std::uint16_t>(sign | 0x7F);
    // E2M1 has no NaN encoding.
    if (saturations) ++*saturations;
    return static_cast<std::uint16_t>(sign | max_index);
  }

  double v = std::fabs(static_cast<double>(x.to_float()));
  if (scheme.grouped()) v = std::ldexp(v, -(static_cast<int>(group_scale) - kUnitScale));

  if (v > table.back()) {
    if (saturations) ++*saturations;
    return static_cast<std::uint16_t>(sign | max_index);
  }
  const auto it = std::lower_bound(table.begin(), table.end(), v);
  auto idx = static_cast<std::uint16_t>(it - table.begin());
  if (*it != v) {
    const double lo = table[idx - 1u];
    const double hi = *it;
    if (v - lo <= hi - v) --idx;
  }
  return static_cast<std::uint16_t>(sign | idx);
}

Bf16 dequantize_value(std::uint16_t code, const CompressionScheme& scheme) {
  switch (scheme.format) {
    case QuantFormat::BF16:
      return Bf16::from_bits(code);
    case QuantFormat::BF8:
      require(code < 256, "BF8 code out of range");
      return Bf16::from_float(decode_e5m2(static_cast<std::uint8_t>(code)));
    case QuantFormat::FP4G:
      require(code < 16, "FP4G code out of range");
      return Bf16::from_float(decode_e2m1(static_cast<std::uint8_t>(code)));
  }
  fail(ErrorCode::kInvalidArgument, "unknown format");
}

Bf16 apply_scale(Bf16 value, std::uint8_t scale) noexcept {
  if (scale == kUnitScale) return value;
  if (scale == 0xFF) return Bf16::from_bits(0x7FC0);
  return Bf16::from_float(std::ldexp(value.to_float(), static_cast<int>(scale) - kUnitScale));
}

std::uint8_t choose_group_scale(float max_abs) noexcept {
  if (!(max_abs > 0.0f) || std::isinf(max_abs)) return kUnitScale;
  int ex = 0;
  const float m = std::frexp(max_abs, &ex);  // max_abs = m * 2^ex, m in [0.5, 1)
  // max_abs / 2^(ex-3) = 8m lies in [4, 8); E2M1 tops out at 6.
  int e = (8.0f * m > 6.0f) ? ex - 2 : ex - 3;
  e = std::clamp(e, -127, 127);
  return static_cast<std::uint8_t>(e + kUnitScale);
}

DequantLut build_lut(const CompressionScheme& scheme) {
  const int bits = scheme.bits();
  if (bits > 8) {
    fail(ErrorCode::kUnsupported, "16-bit codes cannot be dequantized through a 256-entry LUT");
  }
  DequantLut lut;
  lut.effective_size = 1 << bits;
  for (int i = 0; i < 256; ++i) {
    lut.entries[static_cast<std::size_t>(i)] =
        dequantize_value(static_cast<std::uint16_t>(i % lut.effective_size), scheme);
  }
  return lut;
}

CompressedTile compress_tile(const DenseTile& tile, const CompressionScheme& scheme,
                             CompressStats* stats) {
  scheme.validate();
  CompressedTile out;
  std::size_t saturations = 0;

  if (!scheme.bitmask) {
    out.bitmask = TileMask::all_ones();
    out.codes.reserve(kTileElems);
    for (const auto& v : tile) out.codes.push_back(v.bits);
    if (stats) {
      for (const auto& v : tile) stats->nan_inputs += v.is_nan() ? 1 : 0;
    }
    return out;
  }

  std::vector<int> order;
  order.reserve(kTileElems);
  for (int i = 0; i < kTileElems; ++i) {
    if (!tile[static_cast<std::size_t>(i)].is_zero()) order.push_back(i);
  }
  const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(kept_elements(scheme.density)));
  if (keep < order.size()) {
    // NaN ranks above every magnitude; equal magnitudes keep the lower index.
    auto rank = [&](int i) {
      const Bf16 v = tile[static_cast<std::size_t>(i)];
      return v.is_nan() ? INFINITY : std::fabs(v.to_float());
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rank(a) > rank(b); });
    order.resize(keep);
  }
  for (int i : order) out.bitmask.set(i);

  if (scheme.grouped()) {
    out.scales.resize(static_cast<std::size_t>(scheme.groups_per_tile()));
    for (int g = 0; g < scheme.groups_per_tile(); ++g) {
      float max_abs = 0.0f;
      for (int i = g * scheme.group_size; i < (g + 1) * scheme.group_size; ++i) {
        const Bf16 v = tile[static_cast<std::size_t>(i)];
        if (out.bitmask.test(i) && !v.is_nan()) max_abs = std::max(max_abs, std::fabs(v.to_float()));
      }
      out.scales[static_cast<std::size_t>(g)] = choose_group_scale(max_abs);
    }
  }

  out.codes.reserve(keep);
  for (int i = 0; i < kTileElems; ++i) {
    if (!out.bitmask.test(i)) continue;
    const Bf16 v = tile[static_cast<std::size_t>(i)];
    if (stats && v.is_nan()) ++stats->nan_inputs;
    const std::uint8_t scale =
        scheme.grouped() ? out.scales[static_cast<std::size_t>(i / scheme.group_size)] : kUnitScale;
    out.codes.push_back(quantize_value(v, scheme, scale, &saturations));
  }
  if (stats) stats->saturations += saturations;
  return out;
}

void check_tile(const CompressedTile& tile, const CompressionScheme& scheme) {
  const auto corrupt = [](const std::string& what) { fail(ErrorCode::kStructuralCorruption, what); };
  const int pop = tile.bitmask.popcount();
  if (static_cast<std::size_t>(pop) != tile.codes.size()) {
    corrupt("bitmask popcount " + std::to_string(pop) + " does not match " +
            std::to_string(tile.codes.size()) + " codes");
  }
  if (tile.scales.size() != static_cast<std::size_t>(scheme.groups_per_tile())) {
    corrupt("expected " + std::to_string(scheme.groups_per_tile()) + " group scales, found " +
            std::to_string(tile.scales.size()));
  }
  if (!scheme.bitmask && pop != kTileElems) corrupt("mask-free tile must hold 512 codes");
  if (scheme.bits() < 16) {
    const auto limit = 1u << scheme.bits();
    for (auto c : tile.codes) {
      if (c >= limit) corrupt("code " + std::to_string(c) + " exceeds the code width");
    }
  }
}

namespace {

template <typename Decode>
DenseTile expand(const CompressedTile& tile, const CompressionScheme& scheme, Decode decode) {
  check_tile(tile, scheme);
  DenseTile out{};
  std::size_t rank = 0;
  for (int i = 0; i < kTileElems; ++i) {
    if (!tile.bitmask.test(i)) continue;
    Bf16 v = decode(tile.codes[rank++]);
    if (scheme.grouped()) v = apply_scale(v, tile.scales[static_cast<std::size_t>(i / scheme.group_size)]);
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace

DenseTile decompress_tile(const CompressedTile& tile, const CompressionScheme& scheme) {
  return expand(tile, scheme, [&](std::uint16_t c) { return dequantize_value(c, scheme); });
}

DenseTile decompress_tile(const CompressedTile& tile, const CompressionScheme& scheme,
                          const DequantLut& lut) {
  if (scheme.bits() > 8) fail(ErrorCode::kUnsupported, "LUT decompression needs codes of 8 bits or fewer");
  return expand(tile, scheme, [&](std::uint16_t c) { return lut.entries[c]; });
}

}  // namespace cgemm::formats
