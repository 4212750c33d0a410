#pragma once

// Roof-Surface throughput model for compressed GeMM on matrix-engine CPUs.
//
//   TPS   = min(MBW * AI_XM, VOS * AI_XV, MOS)      tiles / second
//   FLOPS = 512 * N * TPS                           FMAs / second
//
// AI_XM is matrix ops per byte fetched (1 / bytes per tile), AI_XV matrix
// ops per vector op (1 / vector ops per tile). The xy-projection of the
// surface (the bounding-region diagram) tells which term binds.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgemm/formats.hpp"

namespace cgemm::roofsurface {

inline constexpr int kTmulCycles = 16;
inline constexpr int kMaxBatchRows = 16;
inline constexpr double kTieTolerance = 1e-12;

struct MachineConfig {
  std::string label;
  double freq_hz = 0;
  int cores = 0;
  double simd_units_per_core = 0;
  int tmul_cycles = kTmulCycles;
  double mem_bw = 0;  // bytes / second

  [[nodiscard]] double vos() const noexcept { return freq_hz * cores * simd_units_per_core; }
  [[nodiscard]] double mos() const noexcept { return freq_hz * cores / tmul_cycles; }
  // Bytes one core may draw per cycle when bandwidth is shared evenly.
  [[nodiscard]] double bytes_per_core_cycle() const noexcept { return mem_bw / (freq_hz * cores); }
  void validate() const;
};

// The same machine with one accelerator PE per core issuing one vOp per cycle.
MachineConfig with_deca(const MachineConfig& machine);

struct DecaParams {
  int w = 32;  // output elements per vOp
  int l = 8;   // number of 256-entry LUTs

  [[nodiscard]] int vops_per_tile() const noexcept { return formats::kTileElems / w; }
  [[nodiscard]] int lut_entries() const noexcept { return l * 256; }
  void validate() const;
  friend bool operator==(const DecaParams&, const DecaParams&) = default;
};

struct KernelSignature {
  double ai_xm = 0;  // matrix ops / byte
  double ai_xv = 0;  // matrix ops / vector op
  int n = 1;
  std::string label;
  void validate() const;
};

enum class Bound : std::uint8_t { MEM = 0, VEC = 1, MTX = 2 };
std::string_view bound_name(Bound b) noexcept;

struct RegionLabel {
  Bound primary = Bound::MEM;
  std::array<bool, 3> binding{};  // indexed by Bound

  [[nodiscard]] bool binds(Bound b) const noexcept { return binding[static_cast<std::size_t>(b)]; }
  [[nodiscard]] bool uniquely(Bound b) const noexcept;
  [[nodiscard]] int binding_count() const noexcept;
  // "MEM|VEC" style, canonical order.
  [[nodiscard]] std::string binding_set() const;
  friend bool operator==(const RegionLabel&, const RegionLabel&) = default;
};

// The three per-factor tile rates of the min clause.
struct Rates {
  double mem = 0;
  double vec = 0;
  double mtx = 0;
  [[nodiscard]] double min() const noexcept;
  [[nodiscard]] double of(Bound b) const noexcept;
};

Rates rates(const MachineConfig& machine, const KernelSignature& sig);
RegionLabel classify(const Rates& r);

double ai_xm(const formats::CompressionScheme& scheme);

// Elements the LUT array dequantizes per cycle: L, 2L or 4L by code width.
int lq(const DecaParams& deca, const formats::CompressionScheme& scheme);
int lq_for_bits(int l, int bits);

// Expected bubbles per vOp under Binomial(W, d) window occupancy.
double expected_bpv(const DecaParams& deca, const formats::CompressionScheme& scheme);
double expected_bpv(int w, int lq, double density);

// Monte Carlo estimate of expected_bpv from explicit Bernoulli windows.
double mc_bpv(const DecaParams& deca, const formats::CompressionScheme& scheme, std::uint64_t samples,
              std::uint64_t seed);
// One pass over `samples` windows scoring several L_q values at once.
std::vector<double> mc_bpv_multi(int w, double density, std::span<const int> lqs, std::uint64_t samples,
                                 std::uint64_t seed);

double ai_xv_deca(const DecaParams& deca, const formats::CompressionScheme& scheme);

KernelSignature deca_signature(const DecaParams& deca, const formats::CompressionScheme& scheme, int n = 1);
KernelSignature signature_for_software(const formats::CompressionScheme& scheme, double vo_tile, int n = 1);

double tps(const MachineConfig& machine, const KernelSignature& sig);
double flops(const MachineConfig& machine, const KernelSignature& sig, int n);
double roofline_flops(const MachineConfig& machine, const KernelSignature& sig, int n);
RegionLabel classify(const MachineConfig& machine, const KernelSignature& sig);

struct BordBoundaries {
  double mem_vec_slope = 0;  // y = slope * x, MEM/VEC
  double mem_mtx_x = 0;      // x = MOS / MBW, MEM/MTX
  double vec_mtx_y = 0;      // y = MOS / VOS, VEC/MTX
};
BordBoundaries bord_boundaries(const MachineConfig& machine);

struct MeshPoint {
  double x = 0;
  double y = 0;
  double flops = 0;
  RegionLabel region;
};
// Row-major by x, then y. Grids must be positive and strictly increasing.
std::vector<MeshPoint> surface_mesh(const MachineConfig& machine, std::span<const double> ai_xm_grid,
                                    std::span<const double> ai_xv_grid, int n);

MachineConfig scale_machine(const MachineConfig& machine, double vos_mult, double mbw_mult);

}  // namespace cgemm::roofsurface
