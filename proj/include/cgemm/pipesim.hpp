#pragma once

// Discrete-event model of one core plus one decompression PE streaming
// compressed tiles into the tile-multiply unit.
//
// Every hardware action becomes an interval on a timeline whose start is the
// latest completion among its dependencies. The critical-path links between
// intervals are kept so idle TMUL cycles can be charged to a cause.
//
// Timing contracts:
//  * memory: a FIFO token bucket grants mem_bw / (cores * freq) bytes per
//    cycle; data lands mem_latency cycles after its last byte is granted. An
//    ideal depth-k prefetcher issues tile i's request when tile i-k is invoked.
//  * PE: each tile is 512/W vOps in order. A vOp holds the dequantization
//    stage for ceil(max(Wnd, 1) / L_q) cycles; expansion and scaling add one
//    cycle of latency each.
//  * core: the TMUL holds a tile for tmul_cycles. Pulling a finished tile
//    costs comm cycles from the TOut registers or 2 * comm via L2.
//  * DECA_FENCE: store metadata / fence / load / multiply serialize per
//    iteration. DECA_TEPL: at most two invocations in flight, invocation
//    latency overlapped with the TMUL. SOFTWARE: vector-unit decompression
//    double-buffered against the TMUL.

#include <array>
#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "cgemm/container.hpp"
#include "cgemm/formats.hpp"
#include "cgemm/roofsurface.hpp"

namespace cgemm::pipesim {

using formats::CompressionScheme;
using roofsurface::DecaParams;
using roofsurface::MachineConfig;

inline constexpr int kLoaders = 2;
inline constexpr int kMaxPrefetchDepth = 8;
inline constexpr int kDefaultPrefetchDepth = 4;
inline constexpr std::int64_t kPipelineTailCycles = 2;  // expansion + scaling

enum class Mode : std::uint8_t { SOFTWARE, DECA_FENCE, DECA_TEPL };
std::string_view mode_name(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

enum class StallCause : std::uint8_t { MEM_WAIT, VEC_BUSY, MTX_BUSY, COMM, STRUCTURAL_TEPL };
inline constexpr std::array kStallCauses = {StallCause::MEM_WAIT, StallCause::VEC_BUSY, StallCause::MTX_BUSY,
                                            StallCause::COMM, StallCause::STRUCTURAL_TEPL};
std::string_view stall_cause_name(StallCause cause) noexcept;

struct SimConfig {
  Mode mode = Mode::DECA_TEPL;
  std::int64_t mem_latency_cycles = 200;
  int prefetch_depth = 0;
  bool tout_direct = true;
  std::int64_t comm_latency_cycles = 10;
  double vo_tile_software = 0;
  int n = 1;
  std::size_t tiles = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Utilization {
  double mem_bw_frac = 0;
  double vec_frac = 0;
  double tmul_frac = 0;
  friend bool operator==(const Utilization&, const Utilization&) = default;
};

struct SimReport {
  std::int64_t total_cycles = 0;
  std::size_t tiles_done = 0;
  double tiles_per_cycle = 0;
  std::uint64_t vops_issued = 0;
  std::uint64_t bubbles_observed = 0;
  std::map<StallCause, std::int64_t> stall_cycles_by_cause;
  Utilization utilization;
  std::vector<std::int64_t> tile_done_cycles;  // TMUL completion, per tile
  std::uint64_t output_digest = 0;             // FNV-1a over every produced tile
  std::size_t functional_mismatches = 0;       // PE output vs reference decoder

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

class TileStream {
 public:
  // Bernoulli(density) masks with uniformly random codes and scales.
  static TileStream synthetic(const CompressionScheme& scheme, std::size_t tiles, std::uint64_t seed);
  static TileStream from_matrix(const formats::CompressedMatrix& matrix);

  [[nodiscard]] const CompressionScheme& scheme() const noexcept { return scheme_; }
  [[nodiscard]] std::size_t size() const noexcept { return tiles_.size(); }
  [[nodiscard]] const formats::CompressedTile& tile(std::size_t i) const { return tiles_[i]; }
  [[nodiscard]] std::size_t bytes(std::size_t i) const { return bytes_[i]; }

 private:
  CompressionScheme scheme_;
  std::vector<formats::CompressedTile> tiles_;
  std::vector<std::size_t> bytes_;
};

// Functional model of the PE datapath: LUT-array dequantization through the
// sub-LUT ports, prefix-sum crossbar expansion, then group scaling.
formats::DenseTile deca_decompress(const formats::CompressedTile& tile, const CompressionScheme& scheme,
                                   const formats::DequantLut& lut, const DecaParams& deca);

SimReport run(const MachineConfig& machine, const DecaParams& deca, const CompressionScheme& scheme,
              const SimConfig& cfg);
// Streams the given tiles; cfg.tiles and cfg.seed are ignored.
SimReport run(const MachineConfig& machine, const DecaParams& deca, const TileStream& stream,
              const SimConfig& cfg);

// Tiles per cycle after dropping the first warmup_tiles completions.
double steady_throughput(const SimReport& report, std::size_t warmup_tiles);

struct ModeRun {
  Mode mode = Mode::DECA_TEPL;
  int prefetch_depth = 0;
  bool tout_direct = true;
  double steady_tiles_per_cycle = 0;
  double speedup_vs_software = 0;
};

// {SOFTWARE, DECA_FENCE, DECA_TEPL} x {prefetch off, on} x {via L2, TOut}.
std::vector<ModeRun> compare_modes(const MachineConfig& machine, const DecaParams& deca,
                                   const CompressionScheme& scheme, const SimConfig& base_cfg,
                                   std::size_t warmup_tiles);

// Feature ladder: fence/no prefetch/via L2, +prefetch, +TOut registers, +TEPL.
std::vector<ModeRun> ablation_ladder(const std::vector<ModeRun>& table);

struct ModelCheck {
  double sim_tps = 0;
  double model_tps = 0;
  double ratio = 0;
  roofsurface::RegionLabel region;
  SimReport report;
};

// Whole-machine tiles/second from the simulated core versus the Roof-Surface
// prediction for the PE signature. Requires DECA_TEPL with prefetch on.
ModelCheck validate_against_model(const MachineConfig& machine, const DecaParams& deca,
                                  const CompressionScheme& scheme, const SimConfig& cfg,
                                  std::size_t warmup_tiles);

}  // namespace cgemm::pipesim
