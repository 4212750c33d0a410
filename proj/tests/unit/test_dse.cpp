#include "doctest.h"

#include <filesystem>

#include "cgemm/dse.hpp"
#include "cgemm/error.hpp"
#include "cgemm/io.hpp"

using namespace cgemm;
using namespace cgemm::dse;
using formats::CompressionScheme;
using formats::QuantFormat;

namespace {

const std::filesystem::path kData = CGEMM_DATA_DIR;

MachineConfig hbm() { return io::machine_from_json(io::read_json_file(kData / "machines/hbm_like.json")); }

std::vector<Kernel> portfolio() {
  return deca_subset(io::portfolio_from_json(io::read_json_file(kData / "portfolios/reconstruction.json")).kernels);
}

const std::vector<int> kW{8, 16, 32, 64};
const std::vector<int> kL{4, 8, 16, 32, 64};

}  // namespace

TEST_CASE("sweep shape and order") {
  const auto pts = sweep(hbm(), portfolio(), std::vector<int>{64, 8, 32, 16}, std::vector<int>{64, 4, 32, 8, 16}, 1);
  std::size_t expected = 0;
  for (int w : kW) {
    for (int l : kL) expected += l <= w ? 1 : 0;
  }
  REQUIRE(pts.size() == expected);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto& a = pts[i - 1].deca;
    const auto& b = pts[i].deca;
    CHECK((a.w < b.w || (a.w == b.w && a.l < b.l)));
  }
  for (const auto& p : pts) {
    CHECK(p.deca.l <= p.deca.w);
    CHECK(p.cost.lut_entries == p.deca.l * 256);
    CHECK(p.per_kernel.size() == portfolio().size());
    CHECK(p.clears_vec == (p.vec_bound_count() == 0));
  }
}

TEST_CASE("dense FP4G has no bubbles once L >= W/4") {
  const std::vector<Kernel> fp4{{"FP4G", CompressionScheme::make(QuantFormat::FP4G, 1.0), 0}};
  for (int w : kW) {
    for (int l : kL) {
      if (l > w || 4 * l < w) continue;
      CHECK(roofsurface::expected_bpv({w, l}, fp4[0].scheme) == 0.0);
    }
  }
}

TEST_CASE("calibrated preset selects W=32, L=8") {
  const auto pts = sweep(hbm(), portfolio(), kW, kL, 1);
  const auto find = [&](int w, int l) {
    for (const auto& p : pts) {
      if (p.deca.w == w && p.deca.l == l) return p;
    }
    FAIL("missing point");
    return pts.front();
  };
  CHECK(find(32, 8).clears_vec);
  CHECK_FALSE(find(8, 4).clears_vec);
  CHECK(find(64, 64).clears_vec);
  CHECK(find(32, 8).cost < find(64, 64).cost);
  CHECK(select_minimal(pts) == DecaParams{32, 8});
}

TEST_CASE("select_minimal") {
  DsePoint a;
  a.deca = {32, 8};
  a.cost = {2048, 32};
  a.clears_vec = true;
  DsePoint b;
  b.deca = {64, 64};
  b.cost = {64 * 256, 64};
  b.clears_vec = true;
  CHECK(select_minimal(std::vector<DsePoint>{b, a}) == DecaParams{32, 8});
  CHECK(select_minimal(std::vector<DsePoint>{b}) == DecaParams{64, 64});

  a.clears_vec = false;
  a.per_kernel.push_back({"k", {roofsurface::Bound::VEC, {false, true, false}}, 1.0});
  try {
    select_minimal(std::vector<DsePoint>{a});
    FAIL("expected no feasible design");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoFeasibleDesign);
    CHECK(std::string(e.what()).find("W=32 L=8") != std::string::npos);
  }
  CHECK(best_effort(std::vector<DsePoint>{a})->deca == DecaParams{32, 8});
}

TEST_CASE("sweep errors") {
  CHECK_THROWS_AS(sweep(hbm(), std::vector<Kernel>{}, kW, kL, 1), Error);
  const std::vector<Kernel> bf16{{"BF16", CompressionScheme::make(QuantFormat::BF16, 0.5), 100}};
  try {
    sweep(hbm(), bf16, kW, kL, 1);
    FAIL("BF16 must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupported);
  }
  CHECK_THROWS_AS(sweep(hbm(), portfolio(), std::vector<int>{24}, kL, 1), Error);
}

TEST_CASE("feasibility properties") {
  const auto kernels = portfolio();
  for (double bw : {1e11, 3e11, 5.6e11, 1e12, 4e12}) {
    auto m = hbm();
    m.mem_bw = bw;
    const auto pts = sweep(m, kernels, kW, std::vector<int>{1, 2, 4, 8, 16, 32, 64}, 1);
    // Raising L never loses feasibility.
    for (const auto& p : pts) {
      if (!p.clears_vec) continue;
      for (const auto& q : pts) {
        if (q.deca.w == p.deca.w && q.deca.l >= p.deca.l) CHECK(q.clears_vec);
      }
    }
    // Nothing cheaper than the selection clears.
    bool any = false;
    for (const auto& p : pts) any = any || p.clears_vec;
    if (!any) continue;
    const auto pick = select_minimal(pts);
    const Cost best{pick.lut_entries(), pick.w};
    for (const auto& p : pts) {
      if (p.clears_vec) CHECK(best <= p.cost);
    }
    // Adding kernels never makes a point clear.
    std::vector<Kernel> fewer(kernels.begin(), kernels.begin() + 3);
    const auto sub = sweep(m, fewer, kW, std::vector<int>{1, 2, 4, 8, 16, 32, 64}, 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].clears_vec) CHECK(sub[i].clears_vec);
    }
  }
}
