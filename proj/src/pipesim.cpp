#include "cgemm/pipesim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cgemm/error.hpp"

namespace cgemm::pipesim {

using formats::CompressedTile;
using formats::DenseTile;
using formats::kTileElems;

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::SOFTWARE: return "SOFTWARE";
    case Mode::DECA_FENCE: return "DECA_FENCE";
    case Mode::DECA_TEPL: return "DECA_TEPL";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "SOFTWARE" || name == "software") return Mode::SOFTWARE;
  if (name == "DECA_FENCE" || name == "fence") return Mode::DECA_FENCE;
  if (name == "DECA_TEPL" || name == "tepl") return Mode::DECA_TEPL;
  fail(ErrorCode::kInvalidArgument, "unknown invocation mode '" + std::string(name) + "'");
}

std::string_view stall_cause_name(StallCause cause) noexcept {
  switch (cause) {
    case StallCause::MEM_WAIT: return "MEM_WAIT";
    case StallCause::VEC_BUSY: return "VEC_BUSY";
    case StallCause::MTX_BUSY: return "MTX_BUSY";
    case StallCause::COMM: return "COMM";
    case StallCause::STRUCTURAL_TEPL: return "STRUCTURAL_TEPL";
  }
  return "?";
}

void SimConfig::validate() const {
  require(tiles >= 1, "a simulation needs at least one tile");
  require(prefetch_depth >= 0 && prefetch_depth <= kMaxPrefetchDepth, "prefetch_depth must lie in [0, 8]");
  require(mem_latency_cycles >= 0, "mem_latency_cycles must be non-negative");
  require(comm_latency_cycles >= 0, "comm_latency_cycles must be non-negative");
  require(n >= 1 && n <= roofsurface::kMaxBatchRows, "batch rows must lie in [1, 16]");
  if (mode == Mode::SOFTWARE) require(vo_tile_software > 0, "SOFTWARE mode needs vo_tile_software > 0");
}

TileStream TileStream::synthetic(const CompressionScheme& scheme, std::size_t tiles, std::uint64_t seed) {
  scheme.validate();
  TileStream s;
  s.scheme_ = scheme;
  s.tiles_.reserve(tiles);
  s.bytes_.assign(tiles, formats::bytes_per_tile(scheme));

  std::mt19937_64 rng(seed);
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(scheme.density, 64));
  const int bits = scheme.bits();
  for (std::size_t t = 0; t < tiles; ++t) {
    CompressedTile tile;
    if (!scheme.bitmask || scheme.density >= 1.0) {
      tile.bitmask = formats::TileMask::all_ones();
    } else {
      for (int i = 0; i < kTileElems; ++i) {
        if (rng() < threshold) tile.bitmask.set(i);
      }
    }
    tile.codes.resize(static_cast<std::size_t>(tile.bitmask.popcount()));
    for (auto& c : tile.codes) c = static_cast<std::uint16_t>(rng() >> (64 - bits));
    tile.scales.resize(static_cast<std::size_t>(scheme.groups_per_tile()));
    for (auto& sc : tile.scales) sc = static_cast<std::uint8_t>(120 + rng() % 15);
    s.tiles_.push_back(std::move(tile));
  }
  return s;
}

TileStream TileStream::from_matrix(const formats::CompressedMatrix& matrix) {
  TileStream s;
  s.scheme_ = matrix.scheme;
  s.tiles_ = matrix.tiles;
  s.bytes_.reserve(matrix.tiles.size());
  for (const auto& t : matrix.tiles) s.bytes_.push_back(formats::encoded_tile_bytes(t, matrix.scheme));
  return s;
}

DenseTile deca_decompress(const CompressedTile& tile, const CompressionScheme& scheme,
                          const formats::DequantLut& lut, const DecaParams& deca) {
  formats::check_tile(tile, scheme);
  const int q = roofsurface::lq(deca, scheme);
  const int ports = q / deca.l;   // parallel reads per 256-entry LUT
  const int span = 256 / ports;   // entries behind each read port
  const int w = deca.w;

  DenseTile out{};
  std::vector<Bf16> sd(static_cast<std::size_t>(w));
  std::size_t sqq = 0;
  for (int base = 0; base < kTileElems; base += w) {
    // Dequantization: window element k reads port k % ports of LUT (k / ports) % L.
    const int wnd = tile.bitmask.count_range(base, w);
    for (int k = 0; k < wnd; ++k) {
      const int code = tile.codes[sqq + static_cast<std::size_t>(k)];
      sd[static_cast<std::size_t>(k)] = lut.entries[static_cast<std::size_t>((k % ports) * span + code)];
    }
    sqq += static_cast<std::size_t>(wnd);
    // Expansion: the running prefix sum of the mask picks the SD lane.
    int prefix = 0;
    for (int p = 0; p < w; ++p) {
      const int i = base + p;
      Bf16 v{};
      if (tile.bitmask.test(i)) v = sd[static_cast<std::size_t>(prefix++)];
      // Scaling
      if (scheme.grouped() && tile.bitmask.test(i)) {
        v = formats::apply_scale(v, tile.scales[static_cast<std::size_t>(i / scheme.group_size)]);
      }
      out[static_cast<std::size_t>(i)] = v;
    }
  }
  return out;
}

namespace {

struct Node {
  std::int64_t start = 0;
  std::int64_t end = 0;
  StallCause cause = StallCause::COMM;
  int pred = -1;         // dependency that set `start`
  bool terminal = false;  // attribution stops here and charges the rest to `cause`
};

struct Dep {
  std::int64_t t;
  int node;
};

class Timeline {
 public:
  int push(std::initializer_list<Dep> deps, std::int64_t duration, StallCause cause) {
    Node n;
    n.cause = cause;
    for (const Dep& d : deps) {
      // Latest dependency wins; on a tie the first listed real node does.
      if (d.t > n.start || (d.t == n.start && n.pred == -1 && d.node >= 0)) {
        n.start = d.t;
        n.pred = d.node;
      }
    }
    n.end = n.start + duration;
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  // Interval [start, end) with no dependency search.
  int push_fixed(std::int64_t start, std::int64_t end, int pred, StallCause cause) {
    nodes_.push_back({start, end, cause, pred, false});
    return static_cast<int>(nodes_.size()) - 1;
  }

  Node& operator[](int i) { return nodes_[static_cast<std::size_t>(i)]; }
  const Node& operator[](int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::int64_t end(int i) const { return i < 0 ? 0 : nodes_[static_cast<std::size_t>(i)].end; }

  // Charges [gap_start, gap_end) along the critical chain ending at `from`.
  void attribute(int from, std::int64_t gap_start, std::int64_t gap_end,
                 std::map<StallCause, std::int64_t>& out) const {
    std::int64_t cursor = gap_end;
    int i = from;
    StallCause last = StallCause::COMM;
    while (i >= 0 && cursor > gap_start) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      last = n.cause;
      if (n.terminal) {
        out[n.cause] += cursor - gap_start;
        return;
      }
      const std::int64_t lo = std::max(n.start, gap_start);
      const std::int64_t hi = std::min(n.end, cursor);
      if (hi > lo) out[n.cause] += hi - lo;
      cursor = std::min(cursor, lo);
      i = n.pred;
    }
    if (cursor > gap_start) out[last] += cursor - gap_start;
  }

 private:
  std::vector<Node> nodes_;
};

// FIFO token bucket shared by every request of the core.
class MemoryBucket {
 public:
  MemoryBucket(double bytes_per_cycle, std::int64_t latency) : rate_(bytes_per_cycle), latency_(latency) {}

  // Cycle at which the requested bytes are usable. A prefetched request has
  // its latency hidden and is only bound by the grant.
  std::int64_t request(std::int64_t at, std::size_t bytes, bool prefetched) {
    const double start = std::max(static_cast<double>(at), free_);
    free_ = start + static_cast<double>(bytes) / rate_;
    total_bytes_ += bytes;
    return static_cast<std::int64_t>(std::ceil(free_ - 1e-9)) + (prefetched ? 0 : latency_);
  }
  [[nodiscard]] std::uint64_t total_bytes() const noexcept { return total_bytes_; }

 private:
  double rate_;
  std::int64_t latency_;
  double free_ = 0;
  std::uint64_t total_bytes_ = 0;
};

std::uint64_t fnv1a(std::uint64_t h, const DenseTile& t) {
  for (const Bf16& v : t) {
    for (int b = 0; b < 2; ++b) {
      h ^= static_cast<std::uint8_t>(v.bits >> (8 * b));
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

struct TileWork {
  std::int64_t deq_cycles = 0;
  std::uint64_t vops = 0;
  std::uint64_t bubbles = 0;
};

TileWork pe_work(const CompressedTile& tile, int w, int q) {
  TileWork work;
  for (int base = 0; base < kTileElems; base += w) {
    const int wnd = std::max(tile.bitmask.count_range(base, w), 1);
    const int cycles = (wnd + q - 1) / q;
    work.deq_cycles += cycles;
    work.bubbles += static_cast<std::uint64_t>(cycles - 1);
    ++work.vops;
  }
  return work;
}

}  // namespace

SimReport run(const MachineConfig& machine, const DecaParams& deca, const TileStream& stream,
              const SimConfig& cfg) {
  machine.validate();
  SimConfig c = cfg;
  c.tiles = stream.size();
  if (stream.size() == 0) fail(ErrorCode::kInvalidArgument, "zero-length tile stream");
  c.validate();
  const CompressionScheme& scheme = stream.scheme();
  const bool on_pe = cfg.mode != Mode::SOFTWARE;
  int q = 0;
  formats::DequantLut lut;
  if (on_pe) {
    deca.validate();
    if (scheme.bits() > 8) {
      fail(ErrorCode::kUnsupported, std::string(formats::format_name(scheme.format)) +
                                        " codes cannot be decompressed by the PE; use SOFTWARE mode");
    }
    q = roofsurface::lq(deca, scheme);
    lut = formats::build_lut(scheme);
  }

  const std::size_t n = stream.size();
  const std::int64_t comm = cfg.comm_latency_cycles;
  const std::int64_t read_cost = cfg.tout_direct ? comm : 2 * comm;
  const std::int64_t tmul = machine.tmul_cycles;
  const int depth = cfg.prefetch_depth;
  const auto vec_cycles =
      on_pe ? 0 : static_cast<std::int64_t>(std::ceil(cfg.vo_tile_software / machine.simd_units_per_core - 1e-9));

  MemoryBucket memory(machine.bytes_per_core_cycle(), cfg.mem_latency_cycles);
  Timeline tl;
  SimReport report;
  report.tiles_done = n;
  report.tile_done_cycles.resize(n);
  for (StallCause cause : kStallCauses) report.stall_cycles_by_cause[cause] = 0;

  // Per tile: the node after which the tile's data may be requested, the
  // node that makes it consumable by the TMUL, and the TMUL node itself.
  std::vector<int> launch(n, -1), ready(n, -1), mul(n, -1);
  std::int64_t vec_busy = 0;
  int last_pipe = -1;  // previous DEQ (PE) or VEC (software) node
  int core = -1;       // fence mode: the instruction that currently heads the core
  int last_issue = -1;  // TEPL mode: previous issue slot

  // Tiles 0..depth-1 are demand fetches; tile i >= depth is requested by the
  // prefetcher when tile i - depth is launched.
  const auto mem_node = [&](std::size_t i) {
    const std::int64_t at = tl.end(launch[i]);
    const bool prefetched = depth > 0 && i >= static_cast<std::size_t>(depth);
    const std::int64_t requested = prefetched ? tl.end(launch[i - static_cast<std::size_t>(depth)]) : at;
    const std::int64_t arrival = std::max(at, memory.request(requested, stream.bytes(i), prefetched));
    return tl.push_fixed(at, arrival, launch[i], StallCause::MEM_WAIT);
  };

  if (cfg.mode == Mode::DECA_FENCE) {
    // Prologue: metadata for the first two tiles, fenced.
    launch[0] = tl.push({{0, -1}}, comm, StallCause::COMM);
    core = launch[0];
    if (n > 1) {
      launch[1] = tl.push({{tl.end(launch[0]), launch[0]}}, comm, StallCause::COMM);
      core = launch[1];
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const CompressedTile& tile = stream.tile(i);
    const int prev_mul = i > 0 ? mul[i - 1] : -1;

    if (cfg.mode == Mode::SOFTWARE) {
      // The vector loop starts tile i once tile i-1 is done and buffer i%2
      // has been handed to the TMUL.
      const int held = i >= 2 ? mul[i - 2] : -1;
      const std::int64_t released = held >= 0 ? tl[held].start : 0;
      launch[i] = tl.push({{tl.end(last_pipe), last_pipe}, {released, held}}, 0, StallCause::VEC_BUSY);
      if (tl[launch[i]].pred >= 0 && tl[launch[i]].pred == held) tl[launch[i]].terminal = true;
      tl[launch[i]].cause = tl[launch[i]].terminal ? StallCause::MTX_BUSY : StallCause::VEC_BUSY;
      const int mem = mem_node(i);
      const int vec = tl.push({{tl.end(mem), mem}}, vec_cycles, StallCause::VEC_BUSY);
      vec_busy += vec_cycles;
      report.vops_issued += static_cast<std::uint64_t>(std::llround(cfg.vo_tile_software));
      last_pipe = vec;
      ready[i] = vec;
      report.output_digest = fnv1a(report.output_digest, formats::decompress_tile(tile, scheme));
    } else {
      if (cfg.mode == Mode::DECA_TEPL) {
        // At most kLoaders TEPLs in flight; issue stays in program order.
        const int hazard = i >= kLoaders ? ready[i - kLoaders] : -1;
        const int issue = tl.push({{tl.end(hazard), hazard}, {tl.end(last_issue), last_issue}}, 0,
                                  StallCause::STRUCTURAL_TEPL);
        tl[issue].terminal = hazard >= 0 && tl[issue].pred == hazard;
        last_issue = issue;
        launch[i] = tl.push({{tl.end(issue), issue}}, comm, StallCause::COMM);
      }
      const int mem = mem_node(i);
      const TileWork work = pe_work(tile, deca.w, q);
      const int deq = tl.push({{tl.end(mem), mem}, {tl.end(last_pipe), last_pipe}}, work.deq_cycles,
                              StallCause::VEC_BUSY);
      vec_busy += work.deq_cycles;
      report.vops_issued += work.vops;
      report.bubbles_observed += work.bubbles;
      last_pipe = deq;
      const int out = tl.push({{tl.end(deq), deq}}, kPipelineTailCycles, StallCause::VEC_BUSY);

      if (cfg.mode == Mode::DECA_TEPL) {
        // Tile registers are double buffered: the load waits for the multiply
        // two tiles back to release its register.
        const int held = i >= 2 ? mul[i - 2] : -1;
        ready[i] = tl.push({{tl.end(out), out}, {tl.end(held), held}}, read_cost, StallCause::COMM);
      } else {
        ready[i] = tl.push({{tl.end(out), out}, {tl.end(core), core}}, read_cost, StallCause::COMM);
      }

      const DenseTile produced = deca_decompress(tile, scheme, lut, deca);
      if (produced != formats::decompress_tile(tile, scheme)) ++report.functional_mismatches;
      report.output_digest = fnv1a(report.output_digest, produced);
    }

    mul[i] = tl.push({{tl.end(ready[i]), ready[i]}, {tl.end(prev_mul), prev_mul}}, tmul, StallCause::MTX_BUSY);
    tl[mul[i]].terminal = true;
    report.tile_done_cycles[i] = tl[mul[i]].end;

    if (cfg.mode == Mode::DECA_FENCE) {
      // The metadata store retires behind the multiply, then the fence.
      if (i + kLoaders < n) {
        launch[i + kLoaders] = tl.push({{tl.end(mul[i]), mul[i]}}, comm, StallCause::COMM);
        core = launch[i + kLoaders];
      } else {
        core = mul[i];
      }
    }

    // Idle TMUL cycles before this multiply.
    const std::int64_t gap_start = prev_mul >= 0 ? tl[prev_mul].end : 0;
    const std::int64_t gap_end = tl[mul[i]].start;
    if (gap_end > gap_start) tl.attribute(tl[mul[i]].pred, gap_start, gap_end, report.stall_cycles_by_cause);
  }

  report.total_cycles = tl[mul[n - 1]].end;
  const auto total = static_cast<double>(report.total_cycles);
  report.tiles_per_cycle = static_cast<double>(n) / total;
  report.utilization.mem_bw_frac =
      std::min(1.0, static_cast<double>(memory.total_bytes()) / (machine.bytes_per_core_cycle() * total));
  report.utilization.vec_frac = static_cast<double>(vec_busy) / total;
  report.utilization.tmul_frac = static_cast<double>(n) * static_cast<double>(tmul) / total;
  return report;
}

SimReport run(const MachineConfig& machine, const DecaParams& deca, const CompressionScheme& scheme,
              const SimConfig& cfg) {
  cfg.validate();
  return run(machine, deca, TileStream::synthetic(scheme, cfg.tiles, cfg.seed), cfg);
}

double steady_throughput(const SimReport& report, std::size_t warmup_tiles) {
  if (warmup_tiles >= report.tiles_done) {
    fail(ErrorCode::kInvalidArgument, "warmup of " + std::to_string(warmup_tiles) +
                                          " tiles leaves nothing of a " + std::to_string(report.tiles_done) +
                                          "-tile run");
  }
  const std::int64_t t0 = warmup_tiles > 0 ? report.tile_done_cycles[warmup_tiles - 1] : 0;
  const std::int64_t t1 = report.tile_done_cycles.back();
  return static_cast<double>(report.tiles_done - warmup_tiles) / static_cast<double>(t1 - t0);
}

std::vector<ModeRun> compare_modes(const MachineConfig& machine, const DecaParams& deca,
                                   const CompressionScheme& scheme, const SimConfig& base_cfg,
                                   std::size_t warmup_tiles) {
  const int depth_on = base_cfg.prefetch_depth > 0 ? base_cfg.prefetch_depth : kDefaultPrefetchDepth;
  const TileStream stream = TileStream::synthetic(scheme, base_cfg.tiles, base_cfg.seed);

  std::vector<ModeRun> rows;
  for (Mode mode : {Mode::SOFTWARE, Mode::DECA_FENCE, Mode::DECA_TEPL}) {
    for (int depth : {0, depth_on}) {
      for (bool direct : {false, true}) {
        SimConfig cfg = base_cfg;
        cfg.mode = mode;
        cfg.prefetch_depth = depth;
        cfg.tout_direct = direct;
        const SimReport r = run(machine, deca, stream, cfg);
        rows.push_back({mode, depth, direct, steady_throughput(r, warmup_tiles), 0.0});
      }
    }
  }
  for (auto& row : rows) {
    const auto sw = std::find_if(rows.begin(), rows.end(), [&](const ModeRun& o) {
      return o.mode == Mode::SOFTWARE && o.prefetch_depth == row.prefetch_depth && o.tout_direct == row.tout_direct;
    });
    row.speedup_vs_software = row.steady_tiles_per_cycle / sw->steady_tiles_per_cycle;
  }
  return rows;
}

std::vector<ModeRun> ablation_ladder(const std::vector<ModeRun>& table) {
  const auto pick = [&](Mode mode, bool prefetch, bool direct) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const ModeRun& r) {
      return r.mode == mode && (r.prefetch_depth > 0) == prefetch && r.tout_direct == direct;
    });
    require(it != table.end(), "mode table is missing an ablation step");
    return *it;
  };
  return {pick(Mode::DECA_FENCE, false, false), pick(Mode::DECA_FENCE, true, false),
          pick(Mode::DECA_FENCE, true, true), pick(Mode::DECA_TEPL, true, true)};
}

ModelCheck validate_against_model(const MachineConfig& machine, const DecaParams& deca,
                                  const CompressionScheme& scheme, const SimConfig& cfg,
                                  std::size_t warmup_tiles) {
  require(cfg.mode == Mode::DECA_TEPL, "model validation runs in DECA_TEPL mode");
  require(cfg.prefetch_depth > 0, "model validation needs the prefetcher on");
  ModelCheck check;
  check.report = run(machine, deca, scheme, cfg);
  check.sim_tps = steady_throughput(check.report, warmup_tiles) * machine.freq_hz * machine.cores;
  const auto pe_machine = roofsurface::with_deca(machine);
  const auto sig = roofsurface::deca_signature(deca, scheme, cfg.n);
  check.model_tps = roofsurface::tps(pe_machine, sig);
  check.region = roofsurface::classify(pe_machine, sig);
  check.ratio = check.sim_tps / check.model_tps;
  return check;
}

}  // namespace cgemm::pipesim
