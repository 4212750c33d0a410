#include "cgemm/container.hpp"

#include <bit>
#include <cstring>

#include "cgemm/error.hpp"

namespace cgemm::formats {
namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (std::uint16_t{u8()} << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      fail(ErrorCode::kTruncated, "payload ends at byte " + std::to_string(in_.size()) +
                                      ", needed " + std::to_string(n) + " more at offset " +
                                      std::to_string(pos_));
    }
  }
  [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_tile(Writer& w, const CompressedTile& tile, const CompressionScheme& scheme) {
  if (scheme.bitmask) {
    for (auto word : tile.bitmask.words()) w.u64(word);
  }
  switch (scheme.bits()) {
    case 16:
      for (auto c : tile.codes) w.u16(c);
      break;
    case 8:
      for (auto c : tile.codes) w.u8(static_cast<std::uint8_t>(c));
      break;
    case 4:
      for (std::size_t i = 0; i < tile.codes.size(); i += 2) {
        const auto lo = static_cast<std::uint8_t>(tile.codes[i] & 0xF);
        const auto hi = i + 1 < tile.codes.size() ? static_cast<std::uint8_t>(tile.codes[i + 1] & 0xF) : 0;
        w.u8(static_cast<std::uint8_t>(lo | (hi << 4)));
      }
      break;
    default:
      fail(ErrorCode::kInvalidArgument, "unsupported code width");
  }
  for (auto s : tile.scales) w.u8(s);
}

CompressedTile read_tile(Reader& r, const CompressionScheme& scheme) {
  CompressedTile tile;
  if (scheme.bitmask) {
    for (auto& word : tile.bitmask.words()) word = r.u64();
  } else {
    tile.bitmask = TileMask::all_ones();
  }
  const auto count = static_cast<std::size_t>(tile.bitmask.popcount());
  tile.codes.resize(count);
  switch (scheme.bits()) {
    case 16:
      for (auto& c : tile.codes) c = r.u16();
      break;
    case 8:
      for (auto& c : tile.codes) c = r.u8();
      break;
    case 4:
      for (std::size_t i = 0; i < count; i += 2) {
        const std::uint8_t b = r.u8();
        tile.codes[i] = b & 0xF;
        if (i + 1 < count) tile.codes[i + 1] = b >> 4;
      }
      break;
  }
  tile.scales.resize(static_cast<std::size_t>(scheme.groups_per_tile()));
  for (auto& s : tile.scales) s = r.u8();
  return tile;
}

}  // namespace

bool tile_aligned(std::uint32_t rows, std::uint32_t cols) noexcept {
  return rows % kTileRows == 0 && cols % kTileCols == 0;
}

Bf16Matrix pad_to_tiles(const Bf16Matrix& m) {
  Bf16Matrix out;
  out.rows = (m.rows + kTileRows - 1) / kTileRows * kTileRows;
  out.cols = (m.cols + kTileCols - 1) / kTileCols * kTileCols;
  out.values.assign(std::size_t{out.rows} * out.cols, Bf16{});
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    for (std::uint32_t c = 0; c < m.cols; ++c) out.values[std::size_t{r} * out.cols + c] = m.at(r, c);
  }
  return out;
}

DenseTile extract_tile(const Bf16Matrix& m, std::uint32_t tr, std::uint32_t tc) {
  DenseTile t{};
  for (int r = 0; r < kTileRows; ++r) {
    for (int c = 0; c < kTileCols; ++c) {
      t[static_cast<std::size_t>(r * kTileCols + c)] = m.at(tr * kTileRows + r, tc * kTileCols + c);
    }
  }
  return t;
}

CompressedMatrix compress_matrix(const Bf16Matrix& m, const CompressionScheme& scheme, CompressStats* stats) {
  scheme.validate();
  if (!tile_aligned(m.rows, m.cols)) {
    fail(ErrorCode::kInvalidArgument, std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                          " is not a multiple of the 16x32 tile shape");
  }
  require(m.values.size() == std::size_t{m.rows} * m.cols, "matrix payload size mismatch");
  CompressedMatrix cm;
  cm.rows = m.rows;
  cm.cols = m.cols;
  cm.scheme = scheme;
  cm.tiles.reserve(std::size_t{cm.tile_rows()} * cm.tile_cols());
  for (std::uint32_t tr = 0; tr < cm.tile_rows(); ++tr) {
    for (std::uint32_t tc = 0; tc < cm.tile_cols(); ++tc) {
      cm.tiles.push_back(compress_tile(extract_tile(m, tr, tc), scheme, stats));
    }
  }
  return cm;
}

Bf16Matrix decompress_matrix(const CompressedMatrix& cm) {
  Bf16Matrix m;
  m.rows = cm.rows;
  m.cols = cm.cols;
  m.values.assign(std::size_t{m.rows} * m.cols, Bf16{});
  for (std::uint32_t tr = 0; tr < cm.tile_rows(); ++tr) {
    for (std::uint32_t tc = 0; tc < cm.tile_cols(); ++tc) {
      const DenseTile t = decompress_tile(cm.tile(tr, tc), cm.scheme);
      for (int r = 0; r < kTileRows; ++r) {
        for (int c = 0; c < kTileCols; ++c) {
          m.values[std::size_t{tr * kTileRows + r} * m.cols + tc * kTileCols + c] =
              t[static_cast<std::size_t>(r * kTileCols + c)];
        }
      }
    }
  }
  return m;
}

std::size_t encoded_tile_bytes(const CompressedTile& tile, const CompressionScheme& scheme) {
  const std::size_t mask = scheme.bitmask ? kBitmaskBytes : 0;
  const std::size_t codes = (tile.codes.size() * static_cast<std::size_t>(scheme.bits()) + 7) / 8;
  return mask + codes + tile.scales.size();
}

std::vector<std::uint8_t> encode_matrix(const CompressedMatrix& cm) {
  cm.scheme.validate();
  require(tile_aligned(cm.rows, cm.cols), "matrix dimensions must be tile multiples");
  require(cm.tiles.size() == std::size_t{cm.tile_rows()} * cm.tile_cols(), "tile count mismatch");
  std::vector<std::uint8_t> out;
  Writer w(out);
  for (char ch : {'D', 'C', 'A', 'W'}) w.u8(static_cast<std::uint8_t>(ch));
  w.u16(kContainerVersion);
  w.u32(cm.rows);
  w.u32(cm.cols);
  w.u8(static_cast<std::uint8_t>(cm.scheme.format));
  w.u8(cm.scheme.bitmask ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(cm.scheme.group_size));
  w.u8(static_cast<std::uint8_t>(cm.scheme.scale_bits));
  w.f64(cm.scheme.density);
  for (const auto& t : cm.tiles) {
    check_tile(t, cm.scheme);
    write_tile(w, t, cm.scheme);
  }
  return out;
}

CompressedMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DCAW", 4) != 0) {
    fail(ErrorCode::kBadMagic, "not a DCAW container");
  }
  for (int i = 0; i < 4; ++i) r.u8();
  const auto version = r.u16();
  if (version != kContainerVersion) {
    fail(ErrorCode::kBadVersion, "unsupported DCAW version " + std::to_string(version));
  }
  CompressedMatrix cm;
  cm.rows = r.u32();
  cm.cols = r.u32();
  const auto fmt = r.u8();
  if (fmt > static_cast<std::uint8_t>(QuantFormat::FP4G)) {
    fail(ErrorCode::kStructuralCorruption, "unknown format tag " + std::to_string(fmt));
  }
  cm.scheme.format = static_cast<QuantFormat>(fmt);
  cm.scheme.bitmask = (r.u8() & 1) != 0;
  cm.scheme.group_size = r.u16();
  cm.scheme.scale_bits = r.u8();
  cm.scheme.density = r.f64();
  try {
    cm.scheme.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kStructuralCorruption, std::string("bad scheme descriptor: ") + e.what());
  }
  if (!tile_aligned(cm.rows, cm.cols)) {
    fail(ErrorCode::kStructuralCorruption, "dimensions are not tile multiples");
  }
  const std::size_t n = std::size_t{cm.tile_rows()} * cm.tile_cols();
  // Every tile costs at least its scales (and mask), so a short file fails fast.
  const std::size_t min_tile = (cm.scheme.bitmask ? kBitmaskBytes : kTileElems * 2) +
                               static_cast<std::size_t>(cm.scheme.groups_per_tile());
  if (min_tile > 0 && r.remaining() / min_tile < n) r.need(n * min_tile);
  cm.tiles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cm.tiles.push_back(read_tile(r, cm.scheme));
  if (r.remaining() != 0) {
    fail(ErrorCode::kStructuralCorruption, std::to_string(r.remaining()) + " trailing bytes after last tile");
  }
  return cm;
}

std::vector<std::uint8_t> encode_raw_matrix(const Bf16Matrix& m) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.u32(m.rows);
  w.u32(m.cols);
  for (auto v : m.values) w.u16(v.bits);
  return out;
}

Bf16Matrix decode_raw_matrix(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Bf16Matrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  const std::size_t n = std::size_t{m.rows} * m.cols;
  r.need(n * 2);
  m.values.resize(n);
  for (auto& v : m.values) v.bits = r.u16();
  if (r.remaining() != 0) fail(ErrorCode::kStructuralCorruption, "trailing bytes after raw matrix payload");
  return m;
}

}  // namespace cgemm::formats
