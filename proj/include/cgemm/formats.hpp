#pragma once

// Compressed weight-tile formats: quantization schemes, the bitmask sparse
// tile layout, offline compression and the reference decompression path.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgemm/bf16.hpp"

namespace cgemm::formats {

inline constexpr int kTileRows = 16;
inline constexpr int kTileCols = 32;
inline constexpr int kTileElems = kTileRows * kTileCols;  // 512
inline constexpr int kBitmaskBytes = kTileElems / 8;      // 64
inline constexpr std::uint8_t kUnitScale = 127;           // E8M0 encoding of 2^0

enum class QuantFormat : std::uint8_t {
  BF16 = 0,  // 16-bit passthrough
  BF8 = 1,   // E5M2
  FP4G = 2,  // E2M1 with an E8M0 scale per 32-element group
};

int bits_per_code(QuantFormat format) noexcept;
std::string_view format_name(QuantFormat format) noexcept;
QuantFormat parse_format(std::string_view name);

struct CompressionScheme {
  QuantFormat format = QuantFormat::BF8;
  double density = 1.0;
  int group_size = 0;
  int scale_bits = 0;
  // False only for the plain uncompressed BF16 layout (1 KB tiles, no mask).
  bool bitmask = true;

  // Fills group_size/scale_bits with the format's mandatory values.
  static CompressionScheme make(QuantFormat format, double density);
  static CompressionScheme uncompressed_bf16();

  [[nodiscard]] int bits() const noexcept { return bits_per_code(format); }
  [[nodiscard]] bool grouped() const noexcept { return group_size > 0; }
  [[nodiscard]] int groups_per_tile() const noexcept {
    return group_size > 0 ? kTileElems / group_size : 0;
  }
  // Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;
  // Human label in the "BF8_5%" / "FP4G" / "BF16" style.
  [[nodiscard]] std::string label() const;

  friend bool operator==(const CompressionScheme&, const CompressionScheme&) = default;
};

// Number of elements kept by magnitude pruning at the given density.
int kept_elements(double density) noexcept;

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
  friend bool operator==(const Fraction&, const Fraction&) = default;
};
Fraction reduce(Fraction f);

// 16 / (Q*d + 1): model-size reduction against dense BF16, mask bit included,
// scale factors excluded. The uncompressed layout has factor 1.
double compression_factor(const CompressionScheme& scheme);
Fraction compression_factor_exact(int bits, Fraction density);

// Full fetch footprint of one tile: codes + bitmask + group scales.
std::size_t bytes_per_tile(const CompressionScheme& scheme);

using DenseTile = std::array<Bf16, kTileElems>;

// 512-bit nonzero mask; bit i covers row-major element i.
class TileMask {
 public:
  [[nodiscard]] bool test(int i) const noexcept {
    return ((words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u) != 0;
  }
  void set(int i) noexcept { words_[static_cast<std::size_t>(i) >> 6] |= std::uint64_t{1} << (i & 63); }
  [[nodiscard]] int popcount() const noexcept;
  // Set bits in [begin, begin + width).
  [[nodiscard]] int count_range(int begin, int width) const noexcept;
  [[nodiscard]] static TileMask all_ones() noexcept;

  [[nodiscard]] const std::array<std::uint64_t, 8>& words() const noexcept { return words_; }
  std::array<std::uint64_t, 8>& words() noexcept { return words_; }

  friend bool operator==(const TileMask&, const TileMask&) = default;

 private:
  std::array<std::uint64_t, 8> words_{};
};

struct CompressedTile {
  TileMask bitmask;
  std::vector<std::uint16_t> codes;  // nonzeros in row-major order
  std::vector<std::uint8_t> scales;  // E8M0, one per group

  friend bool operator==(const CompressedTile&, const CompressedTile&) = default;
};

struct DequantLut {
  std::array<Bf16, 256> entries{};
  int effective_size = 0;
};

// Maps x (divided by the group scale when the scheme is grouped) to the
// nearest code, ties toward the smaller magnitude. Out-of-range inputs
// saturate to the largest finite magnitude and bump *saturations.
std::uint16_t quantize_value(Bf16 x, const CompressionScheme& scheme,
                             std::uint8_t group_scale = kUnitScale,
                             std::size_t* saturations = nullptr);

// Unscaled value of a code. Pure function of (code, format).
Bf16 dequantize_value(std::uint16_t code, const CompressionScheme& scheme);

// value * 2^(scale - 127).
Bf16 apply_scale(Bf16 value, std::uint8_t scale) noexcept;

// Smallest power-of-two scale that maps max_abs into the E2M1 range.
std::uint8_t choose_group_scale(float max_abs) noexcept;

// Rejects 16-bit formats: their codes cannot address a 256-entry table.
DequantLut build_lut(const CompressionScheme& scheme);

struct CompressStats {
  std::size_t saturations = 0;
  std::size_t nan_inputs = 0;
};

CompressedTile compress_tile(const DenseTile& tile, const CompressionScheme& scheme,
                             CompressStats* stats = nullptr);

// Checks the structural invariants of a tile against a scheme; throws
// Error(kStructuralCorruption) on mismatch.
void check_tile(const CompressedTile& tile, const CompressionScheme& scheme);

DenseTile decompress_tile(const CompressedTile& tile, const CompressionScheme& scheme);
// Same result through table lookups instead of the scalar decoder.
DenseTile decompress_tile(const CompressedTile& tile, const CompressionScheme& scheme,
                          const DequantLut& lut);

}  // namespace cgemm::formats
