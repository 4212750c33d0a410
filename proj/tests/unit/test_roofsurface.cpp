#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "cgemm/error.hpp"
#include "cgemm/roofsurface.hpp"
#include "oracles.hpp"

using namespace cgemm;
using namespace cgemm::roofsurface;
using formats::CompressionScheme;
using formats::QuantFormat;

namespace {

// MBW = 576e6 B/s, VOS = 1e7 vops/s, MOS = 2e5 tiles/s.
MachineConfig toy() { return {"toy", 3.2e6, 1, 3.125, 16, 576e6}; }

const CompressionScheme kBf8 = CompressionScheme::make(QuantFormat::BF8, 1.0);
const CompressionScheme kFp4 = CompressionScheme::make(QuantFormat::FP4G, 1.0);

}  // namespace

TEST_CASE("machine rates") {
  const auto m = toy();
  CHECK(m.vos() == doctest::Approx(1e7));
  CHECK(m.mos() == doctest::Approx(2e5));
  CHECK(with_deca(m).simd_units_per_core == 1.0);
  MachineConfig bad = m;
  bad.tmul_cycles = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("ai_xm") {
  CHECK(ai_xm(CompressionScheme::uncompressed_bf16()) == 1.0 / 1024);
  CHECK(ai_xm(kBf8) == 1.0 / 576);
  CHECK(ai_xm(kFp4) == 1.0 / 336);
}

TEST_CASE("lq rule") {
  const DecaParams d{32, 8};
  CHECK(lq(d, kBf8) == 8);
  CHECK(lq(d, kFp4) == 32);
  CHECK(lq_for_bits(8, 7) == 16);
  CHECK(lq_for_bits(8, 6) == 32);
  try {
    lq(d, CompressionScheme::make(QuantFormat::BF16, 1.0));
    FAIL("BF16 must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupported);
  }
}

TEST_CASE("expected bubbles per vOp") {
  CHECK(expected_bpv({32, 8}, kBf8) == 3.0);
  CHECK(expected_bpv({32, 8}, kFp4) == 0.0);
  CHECK(expected_bpv(32, 8, 1e-9) == doctest::Approx(0.0).epsilon(1e-12));

  // Dense closed form, exactly.
  for (int w : {8, 16, 32, 64, 128}) {
    for (int q : {1, 2, 3, 8, 32, 64, 256}) CHECK(expected_bpv(w, q, 1.0) == std::ceil(static_cast<double>(w) / q) - 1);
  }
  // Independent pmf oracle.
  for (int w : {8, 32, 64}) {
    for (int q : {2, 8, 16}) {
      for (double d : {0.05, 0.3, 0.5, 0.9}) {
        CHECK(expected_bpv(w, q, d) == doctest::Approx(oracle::bpv(w, q, d)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("Monte Carlo bubbles") {
  const auto half = CompressionScheme::make(QuantFormat::BF8, 0.5);
  const double e = expected_bpv({32, 8}, half);
  const double mc = mc_bpv({32, 8}, half, 1'000'000, 42);
  CHECK(std::fabs(mc - e) <= 0.01 * e);
  CHECK(mc_bpv({32, 8}, half, 1000, 1) == mc_bpv({32, 8}, half, 1000, 1));
  CHECK(mc_bpv({32, 8}, kBf8, 10, 99) == 3.0);
  CHECK(mc_bpv_multi(32, 0.0, std::vector<int>{8}, 100, 1).front() == 0.0);

  const std::vector<int> qs{2, 8, 32};
  const auto multi = mc_bpv_multi(32, 0.3, qs, 2000, 5);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    CHECK(multi[i] == mc_bpv_multi(32, 0.3, std::vector<int>{qs[i]}, 2000, 5).front());
  }
}

TEST_CASE("bubbles never decrease with density") {
  for (int w : {8, 32, 64}) {
    for (int q : {2, 8, 32}) {
      double prev = 0;
      for (int i = 1; i <= 100; ++i) {
        const double b = expected_bpv(w, q, i / 100.0);
        CHECK(b >= prev - 1e-12);
        prev = b;
      }
    }
  }
}

TEST_CASE("ai_xv of the accelerator") {
  CHECK(ai_xv_deca({32, 8}, kBf8) == 1.0 / 64);
  CHECK(ai_xv_deca({32, 8}, kFp4) == 1.0 / 16);
  CHECK(ai_xv_deca({64, 64}, kBf8) == 1.0 / 8);
}

TEST_CASE("tps and flops") {
  const auto m = toy();
  const KernelSignature sig{1.0 / 576, 1.0 / 64, 1, "BF8"};
  CHECK(tps(m, sig) == doctest::Approx(1.5625e5));
  CHECK(classify(m, sig).primary == Bound::VEC);
  CHECK(classify(m, sig).binding_set() == "VEC");
  CHECK(flops(m, {sig.ai_xm, sig.ai_xv, 4, ""}, 4) == doctest::Approx(3.2e8));
  CHECK(flops(m, sig, 2) == 2 * flops(m, sig, 1));
  CHECK_THROWS_AS(flops(m, sig, 0), Error);
  CHECK_THROWS_AS(flops(m, sig, 17), Error);

  MachineConfig wide = m;
  wide.simd_units_per_core = 1e30;
  wide.tmul_cycles = 1;
  wide.freq_hz = 1e30;
  const KernelSignature mem_only{1.0 / 576, 1.0, 1, ""};
  CHECK(tps(wide, mem_only) == doctest::Approx(wide.mem_bw / 576));
}

TEST_CASE("roofline versus roof-surface") {
  const auto m = toy();
  const KernelSignature vec{1.0 / 576, 1.0 / 64, 1, ""};
  CHECK(roofline_flops(m, vec, 1) > flops(m, vec, 1));
  const KernelSignature mem{1.0 / 5760, 1.0, 1, ""};
  CHECK(roofline_flops(m, mem, 1) == flops(m, mem, 1));
}

TEST_CASE("classify ties") {
  const auto m = toy();
  const KernelSignature triple{m.mos() / m.mem_bw, m.mos() / m.vos(), 1, ""};
  const auto r = classify(m, triple);
  CHECK(r.binding_set() == "MEM|VEC|MTX");
  CHECK(r.primary == Bound::MEM);

  MachineConfig starved = m;
  starved.mem_bw = 1.0;
  CHECK(classify(starved, {1.0 / 576, 1.0 / 64, 1, ""}).binding_set() == "MEM");
}

TEST_CASE("BORD boundaries") {
  const auto b = bord_boundaries(toy());
  CHECK(b.mem_vec_slope == doctest::Approx(57.6));
  CHECK(b.mem_mtx_x == doctest::Approx(2e5 / 576e6));
  CHECK(b.vec_mtx_y == doctest::Approx(0.02));

  const auto b4 = bord_boundaries(scale_machine(toy(), 2, 1));
  CHECK(b4.mem_vec_slope == doctest::Approx(b.mem_vec_slope / 2));
  CHECK(b4.vec_mtx_y == doctest::Approx(b.vec_mtx_y / 2));
  CHECK(b4.mem_mtx_x == b.mem_mtx_x);

  // Points on each line bind both adjacent factors.
  const auto m = toy();
  const double x = b.mem_mtx_x / 4;
  CHECK(classify(m, {x, b.mem_vec_slope * x, 1, ""}).binding_set() == "MEM|VEC");
  CHECK(classify(m, {b.mem_mtx_x, 1.0, 1, ""}).binding_set() == "MEM|MTX");
  CHECK(classify(m, {1.0, b.vec_mtx_y, 1, ""}).binding_set() == "VEC|MTX");
}

TEST_CASE("scale_machine") {
  const auto m = toy();
  const auto same = scale_machine(m, 1, 1);
  CHECK(same.label == m.label);
  CHECK(same.vos() == m.vos());
  CHECK(same.mem_bw == m.mem_bw);
  const auto s = scale_machine(m, 4, 2);
  CHECK(s.vos() == doctest::Approx(4 * m.vos()));
  CHECK(s.mem_bw == 2 * m.mem_bw);
  CHECK(s.label == "toy+4xVOS+2xMBW");
  CHECK_THROWS_AS(scale_machine(m, 0, 1), Error);
}

TEST_CASE("software signatures") {
  CHECK(signature_for_software(kBf8, 512).ai_xv == 1.0 / 512);
  CHECK(signature_for_software(kBf8, 100).ai_xv > signature_for_software(kBf8, 200).ai_xv);
  const auto s = signature_for_software(kBf8, 128);
  CHECK(s.ai_xm == 1.0 / 576);
  CHECK(s.ai_xv == 1.0 / 128);
  CHECK_THROWS_AS(signature_for_software(kBf8, 0), Error);
}

TEST_CASE("surface mesh") {
  const auto m = toy();
  const std::vector<double> one{1e-3};
  const auto single = surface_mesh(m, one, one, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].flops == flops(m, {1e-3, 1e-3, 1, ""}, 1));

  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(1e-6 * std::pow(10.0, i * 0.3));
    ys.push_back(1e-4 * std::pow(10.0, i * 0.3));
  }
  const auto mesh = surface_mesh(m, xs, ys, 2);
  REQUIRE(mesh.size() == 400);
  double peak = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const auto& p = mesh[i * ys.size() + j];
      CHECK(p.x == xs[i]);
      CHECK(p.y == ys[j]);
      if (i > 0) CHECK(p.flops >= mesh[(i - 1) * ys.size() + j].flops);
      peak = std::max(peak, p.flops);
    }
  }
  CHECK(peak == doctest::Approx(512.0 * 2 * m.mos()));
  CHECK(surface_mesh(m, {}, ys, 1).empty());
  const std::vector<double> unsorted{2.0, 1.0};
  CHECK_THROWS_AS(surface_mesh(m, unsorted, ys, 1), Error);
}

TEST_CASE("model properties on random inputs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lg(-3, 3);
  const auto r = [&](double base) { return base * std::pow(10.0, lg(rng)); };
  for (int i = 0; i < 2000; ++i) {
    const MachineConfig m{"m", r(1e9), 1 + static_cast<int>(rng() % 64), r(2), 1 + static_cast<int>(rng() % 32),
                          r(1e11)};
    const KernelSignature s{r(1e-3), r(1e-2), 1 + static_cast<int>(rng() % 16), ""};
    const auto rt = rates(m, s);
    const double t = tps(m, s);
    CHECK(t <= rt.mem);
    CHECK(t <= rt.vec);
    CHECK(t <= rt.mtx);
    CHECK((t == rt.mem || t == rt.vec || t == rt.mtx));

    // Monotone in each input.
    MachineConfig more = m;
    more.mem_bw *= 1.5;
    CHECK(tps(more, s) >= t);
    more = m;
    more.simd_units_per_core *= 1.5;
    CHECK(tps(more, s) >= t);
    more = m;
    more.freq_hz *= 1.5;
    CHECK(tps(more, s) >= t);
    CHECK(tps(m, {s.ai_xm * 1.5, s.ai_xv, s.n, ""}) >= t);
    CHECK(tps(m, {s.ai_xm, s.ai_xv * 1.5, s.n, ""}) >= t);

    // Roofline bounds the roof-surface; equal iff MEM or MTX is the minimum.
    const auto region = classify(m, s);
    const double rl = roofline_flops(m, s, s.n);
    const double rs = flops(m, s, s.n);
    CHECK(rl >= rs);
    CHECK((rl == rs) == (region.binds(Bound::MEM) || region.binds(Bound::MTX)));

    // Equal signatures, equal answers.
    const KernelSignature twin{s.ai_xm, s.ai_xv, s.n, "other"};
    CHECK(flops(m, twin, s.n) == rs);
    CHECK(classify(m, twin) == region);
  }
}
