#pragma once

// Design-space exploration of the PE's {W, L} pair over a kernel portfolio.
// A point "clears VEC" when no kernel has the vector term as its unique
// binding factor; the cheapest clearing point (LUT entries, then W) wins.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgemm/formats.hpp"
#include "cgemm/roofsurface.hpp"

namespace cgemm::dse {

using formats::CompressionScheme;
using roofsurface::DecaParams;
using roofsurface::MachineConfig;

struct Kernel {
  std::string label;
  CompressionScheme scheme;
  double vo_tile = 0;  // software vector ops per tile; BORD only
};

struct KernelResult {
  std::string label;
  roofsurface::RegionLabel region;
  double flops = 0;
};

struct Cost {
  int lut_entries = 0;
  int w = 0;
  friend auto operator<=>(const Cost&, const Cost&) = default;
};

struct DsePoint {
  DecaParams deca;
  std::vector<KernelResult> per_kernel;
  bool clears_vec = false;
  Cost cost;

  [[nodiscard]] int vec_bound_count() const noexcept;
};

// Kernels the PE can decompress (codes of at most 8 bits).
bool deca_supported(const CompressionScheme& scheme) noexcept;
std::vector<Kernel> deca_subset(std::span<const Kernel> kernels);

// One point per (W, L) with L <= W, ordered by W then L.
std::vector<DsePoint> sweep(const MachineConfig& machine, std::span<const Kernel> kernels,
                            std::span<const int> w_grid, std::span<const int> l_grid, int n);

// Throws kNoFeasibleDesign when nothing clears; the message names the point
// with the fewest VEC-bound kernels.
DecaParams select_minimal(std::span<const DsePoint> points);

// The diagnostic point select_minimal reports when nothing clears.
std::optional<DsePoint> best_effort(std::span<const DsePoint> points);

}  // namespace cgemm::dse
