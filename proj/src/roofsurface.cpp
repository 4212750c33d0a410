#include "cgemm/roofsurface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <bit>

#include "cgemm/error.hpp"

namespace cgemm::roofsurface {

using formats::CompressionScheme;

void MachineConfig::validate() const {
  require(freq_hz > 0, "machine freq_hz must be positive");
  require(cores > 0, "machine cores must be positive");
  require(simd_units_per_core > 0, "machine simd_units_per_core must be positive");
  require(tmul_cycles >= 1, "machine tmul_cycles must be at least 1");
  require(mem_bw > 0, "machine mem_bw must be positive");
}

MachineConfig with_deca(const MachineConfig& machine) {
  MachineConfig m = machine;
  m.simd_units_per_core = 1.0;
  m.label += "+DECA";
  return m;
}

void DecaParams::validate() const {
  require(w >= 8 && w <= 128 && std::has_single_bit(static_cast<unsigned>(w)),
          "W must be a power of two in [8, 128]");
  require(l >= 1 && l <= w, "L must lie in [1, W]");
}

void KernelSignature::validate() const {
  require(ai_xm > 0, "ai_xm must be positive");
  require(ai_xv > 0, "ai_xv must be positive");
  require(n >= 1 && n <= kMaxBatchRows, "batch rows must lie in [1, 16]");
}

std::string_view bound_name(Bound b) noexcept {
  switch (b) {
    case Bound::MEM: return "MEM";
    case Bound::VEC: return "VEC";
    case Bound::MTX: return "MTX";
  }
  return "?";
}

bool RegionLabel::uniquely(Bound b) const noexcept { return binds(b) && binding_count() == 1; }

int RegionLabel::binding_count() const noexcept {
  return static_cast<int>(std::count(binding.begin(), binding.end(), true));
}

std::string RegionLabel::binding_set() const {
  std::string out;
  for (Bound b : {Bound::MEM, Bound::VEC, Bound::MTX}) {
    if (!binds(b)) continue;
    if (!out.empty()) out += '|';
    out += bound_name(b);
  }
  return out;
}

double Rates::min() const noexcept { return std::min({mem, vec, mtx}); }

double Rates::of(Bound b) const noexcept {
  switch (b) {
    case Bound::MEM: return mem;
    case Bound::VEC: return vec;
    case Bound::MTX: return mtx;
  }
  return 0;
}

Rates rates(const MachineConfig& machine, const KernelSignature& sig) {
  return {machine.mem_bw * sig.ai_xm, machine.vos() * sig.ai_xv, machine.mos()};
}

RegionLabel classify(const Rates& r) {
  const double m = r.min();
  RegionLabel label;
  bool have_primary = false;
  for (Bound b : {Bound::MEM, Bound::VEC, Bound::MTX}) {
    const double t = r.of(b);
    const bool ties = std::isinf(m) ? std::isinf(t) : t <= m * (1.0 + kTieTolerance);
    label.binding[static_cast<std::size_t>(b)] = ties;
    if (ties && !have_primary) {
      label.primary = b;
      have_primary = true;
    }
  }
  return label;
}

double ai_xm(const CompressionScheme& scheme) {
  return 1.0 / static_cast<double>(formats::bytes_per_tile(scheme));
}

int lq_for_bits(int l, int bits) {
  require(l >= 1, "L must be positive");
  require(bits >= 1, "code width must be positive");
  if (bits > 8) fail(ErrorCode::kUnsupported, "codes wider than 8 bits cannot be LUT-dequantized");
  if (bits == 8) return l;
  if (bits == 7) return 2 * l;
  return 4 * l;
}

int lq(const DecaParams& deca, const CompressionScheme& scheme) {
  return lq_for_bits(deca.l, scheme.bits());
}

double expected_bpv(int w, int lq, double density) {
  require(w >= 1 && lq >= 1, "W and L_q must be positive");
  require(density >= 0.0 && density <= 1.0, "density must lie in [0, 1]");
  const int windows = (w + lq - 1) / lq;  // ceil(W / L_q)
  if (density >= 1.0) return windows - 1;
  if (density <= 0.0) return 0.0;

  // Binomial(W, d) CDF from log-space pmf terms.
  const double log_d = std::log(density);
  const double log_q = std::log1p(-density);
  std::vector<double> cdf(static_cast<std::size_t>(w) + 1);
  double acc = 0.0;
  for (int k = 0; k <= w; ++k) {
    const double log_choose = std::lgamma(w + 1.0) - std::lgamma(k + 1.0) - std::lgamma(w - k + 1.0);
    acc += std::exp(log_choose + k * log_d + (w - k) * log_q);
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  const auto F = [&](int i) { return i >= w ? 1.0 : cdf[static_cast<std::size_t>(i)]; };

  double bpv = 0.0;
  for (int k = 0; k < windows; ++k) bpv += k * (F((k + 1) * lq) - F(k * lq));
  return bpv;
}

double expected_bpv(const DecaParams& deca, const CompressionScheme& scheme) {
  deca.validate();
  return expected_bpv(deca.w, lq(deca, scheme), scheme.density);
}

std::vector<double> mc_bpv_multi(int w, double density, std::span<const int> lqs, std::uint64_t samples,
                                 std::uint64_t seed) {
  require(samples >= 1, "samples must be at least 1");
  require(w >= 1 && w <= 128, "W must lie in [1, 128]");
  require(density >= 0.0 && density <= 1.0, "density must lie in [0, 1]");
  for (int q : lqs) require(q >= 1, "L_q must be positive");

  // Occupancy histogram of `samples` windows of W Bernoulli(d) bits.
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(w) + 1, 0);
  if (density >= 1.0) {
    hist[static_cast<std::size_t>(w)] = samples;
  } else if (density <= 0.0) {
    hist[0] = samples;
  } else {
    std::mt19937_64 rng(seed);
    const auto threshold = static_cast<std::uint64_t>(std::ldexp(density, 64));
    for (std::uint64_t s = 0; s < samples; ++s) {
      int nnz = 0;
      for (int b = 0; b < w; ++b) nnz += rng() < threshold ? 1 : 0;
      ++hist[static_cast<std::size_t>(nnz)];
    }
  }

  std::vector<double> out;
  out.reserve(lqs.size());
  for (int q : lqs) {
    double bubbles = 0.0;
    for (int nnz = 0; nnz <= w; ++nnz) {
      const int cycles = std::max((nnz + q - 1) / q, 1);
      bubbles += static_cast<double>(hist[static_cast<std::size_t>(nnz)]) * (cycles - 1);
    }
    out.push_back(bubbles / static_cast<double>(samples));
  }
  return out;
}

double mc_bpv(const DecaParams& deca, const CompressionScheme& scheme, std::uint64_t samples,
              std::uint64_t seed) {
  deca.validate();
  const int q = lq(deca, scheme);
  return mc_bpv_multi(deca.w, scheme.density, std::span<const int>(&q, 1), samples, seed).front();
}

double ai_xv_deca(const DecaParams& deca, const CompressionScheme& scheme) {
  const double bpv = expected_bpv(deca, scheme);
  return 1.0 / (deca.vops_per_tile() * (1.0 + bpv));
}

KernelSignature deca_signature(const DecaParams& deca, const CompressionScheme& scheme, int n) {
  KernelSignature sig{ai_xm(scheme), ai_xv_deca(deca, scheme), n, scheme.label()};
  sig.validate();
  return sig;
}

KernelSignature signature_for_software(const CompressionScheme& scheme, double vo_tile, int n) {
  require(vo_tile > 0, "vo_tile must be positive");
  KernelSignature sig{ai_xm(scheme), 1.0 / vo_tile, n, scheme.label()};
  sig.validate();
  return sig;
}

double tps(const MachineConfig& machine, const KernelSignature& sig) {
  return rates(machine, sig).min();
}

namespace {
void require_batch(int n) {
  if (n < 1 || n > kMaxBatchRows) {
    fail(ErrorCode::kUnsupported, "batch rows " + std::to_string(n) + " outside [1, 16]");
  }
}
}  // namespace

double flops(const MachineConfig& machine, const KernelSignature& sig, int n) {
  require_batch(n);
  return 512.0 * n * tps(machine, sig);
}

double roofline_flops(const MachineConfig& machine, const KernelSignature& sig, int n) {
  require_batch(n);
  // Same evaluation order as flops() so MEM/MTX-bound points agree bit for bit.
  const Rates r = rates(machine, sig);
  return 512.0 * n * std::min(r.mem, r.mtx);
}

RegionLabel classify(const MachineConfig& machine, const KernelSignature& sig) {
  return classify(rates(machine, sig));
}

BordBoundaries bord_boundaries(const MachineConfig& machine) {
  machine.validate();
  return {machine.mem_bw / machine.vos(), machine.mos() / machine.mem_bw, machine.mos() / machine.vos()};
}

std::vector<MeshPoint> surface_mesh(const MachineConfig& machine, std::span<const double> ai_xm_grid,
                                    std::span<const double> ai_xv_grid, int n) {
  require_batch(n);
  const auto check = [](std::span<const double> g, const char* name) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      require(g[i] > 0, std::string(name) + " grid must be positive");
      require(i == 0 || g[i] > g[i - 1], std::string(name) + " grid must be strictly increasing");
    }
  };
  check(ai_xm_grid, "ai_xm");
  check(ai_xv_grid, "ai_xv");

  std::vector<MeshPoint> mesh;
  mesh.reserve(ai_xm_grid.size() * ai_xv_grid.size());
  for (double x : ai_xm_grid) {
    for (double y : ai_xv_grid) {
      const KernelSignature sig{x, y, n, {}};
      mesh.push_back({x, y, flops(machine, sig, n), classify(machine, sig)});
    }
  }
  return mesh;
}

MachineConfig scale_machine(const MachineConfig& machine, double vos_mult, double mbw_mult) {
  require(vos_mult > 0 && mbw_mult > 0, "scaling multipliers must be positive");
  MachineConfig m = machine;
  m.simd_units_per_core *= vos_mult;
  m.mem_bw *= mbw_mult;
  char buf[64];
  if (vos_mult != 1.0) {
    std::snprintf(buf, sizeof buf, "+%gxVOS", vos_mult);
    m.label += buf;
  }
  if (mbw_mult != 1.0) {
    std::snprintf(buf, sizeof buf, "+%gxMBW", mbw_mult);
    m.label += buf;
  }
  return m;
}

}  // namespace cgemm::roofsurface
