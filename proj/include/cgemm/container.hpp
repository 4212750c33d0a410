#pragma once

// Whole-matrix compression and the "DCAW" binary container.
//
// Layout (all integers little-endian):
//   "DCAW" | u16 version | u32 rows | u32 cols
//   | u8 format | u8 flags (bit0: bitmask stored) | u16 group_size
//   | u8 scale_bits | f64 density
//   then tiles in row-major tile order, each:
//   bitmask (64 B, bit i = byte i/8 bit i%8, omitted for the mask-free layout)
//   | codes (16-bit LE, 8-bit, or 4-bit two per byte low nibble first)
//   | scales (one byte each)

#include <cstdint>
#include <span>
#include <vector>

#include "cgemm/formats.hpp"

namespace cgemm::formats {

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 27;

struct Bf16Matrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<Bf16> values;  // row-major

  [[nodiscard]] Bf16 at(std::uint32_t r, std::uint32_t c) const { return values[std::size_t{r} * cols + c]; }
  friend bool operator==(const Bf16Matrix&, const Bf16Matrix&) = default;
};

struct CompressedMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  CompressionScheme scheme;
  std::vector<CompressedTile> tiles;  // row-major tile order

  [[nodiscard]] std::uint32_t tile_rows() const noexcept { return rows / kTileRows; }
  [[nodiscard]] std::uint32_t tile_cols() const noexcept { return cols / kTileCols; }
  [[nodiscard]] const CompressedTile& tile(std::uint32_t tr, std::uint32_t tc) const {
    return tiles[std::size_t{tr} * tile_cols() + tc];
  }
  friend bool operator==(const CompressedMatrix&, const CompressedMatrix&) = default;
};

bool tile_aligned(std::uint32_t rows, std::uint32_t cols) noexcept;
// Zero-pads up to the next multiple of the tile shape.
Bf16Matrix pad_to_tiles(const Bf16Matrix& m);

DenseTile extract_tile(const Bf16Matrix& m, std::uint32_t tr, std::uint32_t tc);
CompressedMatrix compress_matrix(const Bf16Matrix& m, const CompressionScheme& scheme,
                                 CompressStats* stats = nullptr);
Bf16Matrix decompress_matrix(const CompressedMatrix& cm);

// Exact serialized size of one tile.
std::size_t encoded_tile_bytes(const CompressedTile& tile, const CompressionScheme& scheme);

std::vector<std::uint8_t> encode_matrix(const CompressedMatrix& cm);
CompressedMatrix decode_matrix(std::span<const std::uint8_t> bytes);

// Raw input format: u32 rows | u32 cols | rows*cols little-endian BF16.
std::vector<std::uint8_t> encode_raw_matrix(const Bf16Matrix& m);
Bf16Matrix decode_raw_matrix(std::span<const std::uint8_t> bytes);

}  // namespace cgemm::formats
