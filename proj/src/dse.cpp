#include "cgemm/dse.hpp"

#include <algorithm>

#include "cgemm/error.hpp"

namespace cgemm::dse {

int DsePoint::vec_bound_count() const noexcept {
  return static_cast<int>(std::count_if(per_kernel.begin(), per_kernel.end(), [](const KernelResult& k) {
    return k.region.uniquely(roofsurface::Bound::VEC);
  }));
}

bool deca_supported(const CompressionScheme& scheme) noexcept { return scheme.bits() <= 8; }

std::vector<Kernel> deca_subset(std::span<const Kernel> kernels) {
  std::vector<Kernel> out;
  for (const Kernel& k : kernels) {
    if (deca_supported(k.scheme)) out.push_back(k);
  }
  return out;
}

std::vector<DsePoint> sweep(const MachineConfig& machine, std::span<const Kernel> kernels,
                            std::span<const int> w_grid, std::span<const int> l_grid, int n) {
  machine.validate();
  if (kernels.empty()) fail(ErrorCode::kInvalidArgument, "empty kernel portfolio");
  for (const Kernel& k : kernels) {
    k.scheme.validate();
    if (!deca_supported(k.scheme)) {
      fail(ErrorCode::kUnsupported, "kernel '" + k.label + "' uses codes the PE cannot decompress");
    }
  }
  std::vector<int> ws(w_grid.begin(), w_grid.end());
  std::vector<int> ls(l_grid.begin(), l_grid.end());
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());

  const MachineConfig pe = roofsurface::with_deca(machine);
  std::vector<DsePoint> points;
  for (int w : ws) {
    for (int l : ls) {
      if (l > w) continue;
      DsePoint p;
      p.deca = {w, l};
      p.deca.validate();
      p.cost = {p.deca.lut_entries(), w};
      for (const Kernel& k : kernels) {
        const auto sig = roofsurface::deca_signature(p.deca, k.scheme, n);
        p.per_kernel.push_back({k.label, roofsurface::classify(pe, sig), roofsurface::flops(pe, sig, n)});
      }
      p.clears_vec = p.vec_bound_count() == 0;
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::optional<DsePoint> best_effort(std::span<const DsePoint> points) {
  const auto it = std::min_element(points.begin(), points.end(), [](const DsePoint& a, const DsePoint& b) {
    const int va = a.vec_bound_count();
    const int vb = b.vec_bound_count();
    return va != vb ? va < vb : a.cost < b.cost;
  });
  if (it == points.end()) return std::nullopt;
  return *it;
}

DecaParams select_minimal(std::span<const DsePoint> points) {
  const DsePoint* best = nullptr;
  for (const DsePoint& p : points) {
    if (p.clears_vec && (best == nullptr || p.cost < best->cost)) best = &p;
  }
  if (best != nullptr) return best->deca;

  const auto diag = best_effort(points);
  if (!diag) fail(ErrorCode::kNoFeasibleDesign, "no design points to choose from");
  fail(ErrorCode::kNoFeasibleDesign,
       "no {W, L} pair clears the VEC region; closest is W=" + std::to_string(diag->deca.w) +
           " L=" + std::to_string(diag->deca.l) + " with " + std::to_string(diag->vec_bound_count()) +
           " VEC-bound kernel(s)");
}

}  // namespace cgemm::dse
