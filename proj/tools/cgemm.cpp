// cgemm: compress weights, evaluate the Roof-Surface model, run the
// decompression simulator and sweep accelerator designs.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgemm/container.hpp"
#include "cgemm/dse.hpp"
#include "cgemm/error.hpp"
#include "cgemm/io.hpp"
#include "cgemm/pipesim.hpp"
#include "cgemm/roofsurface.hpp"

namespace {

using namespace cgemm;
using io::format_double;
using io::json;

struct Common {
  std::string machine;
  std::string scheme;
  std::string deca;
  std::string output;
  std::string format;
  int n = 1;
  std::uint64_t seed = 1;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_file_atomic(path, text);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json load_json_arg(const std::string& value, const std::string& what) {
  require(!value.empty(), "--" + what + " is required");
  if (value.front() == '{') return io::parse_json(value, "--" + what);
  return io::read_json_file(value);
}

roofsurface::MachineConfig load_machine(const Common& c) { return io::machine_from_json(load_json_arg(c.machine, "machine")); }

formats::CompressionScheme load_scheme(const Common& c) { return io::scheme_from_json(load_json_arg(c.scheme, "scheme")); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, "bad integer '" + s + "' in " + what);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, "bad number '" + s + "' in " + what);
}

std::optional<roofsurface::DecaParams> parse_deca(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto parts = split(s, ',');
  require(parts.size() == 2, "--deca expects W,L");
  roofsurface::DecaParams d{parse_int(parts[0], "--deca"), parse_int(parts[1], "--deca")};
  d.validate();
  return d;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_int(p, what));
  require(!out.empty(), what + " must not be empty");
  return out;
}

// "a,b,c" explicit values or "lo:hi:count" log-spaced.
std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  std::vector<double> out;
  const auto range = split(s, ':');
  if (range.size() == 3) {
    const double lo = parse_double(range[0], what);
    const double hi = parse_double(range[1], what);
    const int count = parse_int(range[2], what);
    require(lo > 0 && hi > lo && count >= 2, what + " range needs 0 < lo < hi and count >= 2");
    for (int i = 0; i < count; ++i) {
      out.push_back(i == count - 1 ? hi : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    }
    return out;
  }
  if (s.empty()) return out;
  for (const auto& p : split(s, ',')) out.push_back(parse_double(p, what));
  return out;
}

void require_format(const Common& c, std::initializer_list<const char*> allowed) {
  if (c.format.empty()) return;
  for (const char* a : allowed) {
    if (c.format == a) return;
  }
  fail(ErrorCode::kInvalidArgument, "--format " + c.format + " is not available for this command");
}

json region_json(const roofsurface::RegionLabel& r) {
  return {{"primary", roofsurface::bound_name(r.primary)}, {"binding_set", r.binding_set()}};
}

formats::Bf16Matrix read_raw(const std::string& path) {
  const auto bytes = io::read_file(path);
  return formats::decode_raw_matrix(bytes);
}

// compress ------------------------------------------------------------------

void cmd_compress(const Common& c, const std::string& input, bool pad) {
  require(!input.empty(), "--input is required");
  require(!c.output.empty(), "--output is required");
  const auto scheme = load_scheme(c);
  auto matrix = read_raw(input);
  if (!formats::tile_aligned(matrix.rows, matrix.cols)) {
    if (!pad) {
      fail(ErrorCode::kInvalidArgument, std::to_string(matrix.rows) + "x" + std::to_string(matrix.cols) +
                                            " is not a multiple of 16x32; pass --pad to zero-pad");
    }
    matrix = formats::pad_to_tiles(matrix);
  }
  formats::CompressStats stats;
  const auto cm = formats::compress_matrix(matrix, scheme, &stats);
  const auto bytes = formats::encode_matrix(cm);
  io::write_file_atomic(c.output, bytes);

  char line[256];
  std::snprintf(line, sizeof line, "scheme=%s rows=%u cols=%u tiles=%zu bytes=%zu bytes_per_tile=%zu cf=%.3f",
                scheme.label().c_str(), cm.rows, cm.cols, cm.tiles.size(), bytes.size(),
                formats::bytes_per_tile(scheme), formats::compression_factor(scheme));
  std::cout << line;
  if (stats.saturations > 0 || stats.nan_inputs > 0) {
    std::cout << " saturated=" << stats.saturations << " nan=" << stats.nan_inputs;
  }
  std::cout << "\n";
}

// inspect -------------------------------------------------------------------

void cmd_inspect(const Common& c, const std::string& input) {
  require(!input.empty(), "--input is required");
  require_format(c, {"json"});
  const auto bytes = io::read_file(input);
  const auto cm = formats::decode_matrix(bytes);
  std::size_t nnz = 0;
  for (const auto& t : cm.tiles) {
    formats::check_tile(t, cm.scheme);
    nnz += t.codes.size();
  }
  const double elems = static_cast<double>(cm.tiles.size()) * formats::kTileElems;
  const json out = {{"rows", cm.rows},
                    {"cols", cm.cols},
                    {"tiles", cm.tiles.size()},
                    {"scheme", io::to_json(cm.scheme)},
                    {"file_bytes", bytes.size()},
                    {"bytes_per_tile", formats::bytes_per_tile(cm.scheme)},
                    {"compression_factor", formats::compression_factor(cm.scheme)},
                    {"nonzeros", nnz},
                    {"measured_density", elems > 0 ? static_cast<double>(nnz) / elems : 0.0}};
  emit(c.output, dump(out));
}

// analyze -------------------------------------------------------------------

void cmd_analyze(const Common& c, double vo_tile) {
  require_format(c, {"json"});
  const auto machine = load_machine(c);
  const auto scheme = load_scheme(c);
  const auto deca = parse_deca(c.deca);
  require(deca.has_value() || vo_tile > 0, "analyze needs --deca W,L or --vo-tile");

  json out = {{"machine", io::to_json(machine)}, {"scheme", io::to_json(scheme)}};
  roofsurface::MachineConfig target = machine;
  roofsurface::KernelSignature sig;
  if (deca) {
    target = roofsurface::with_deca(machine);
    sig = roofsurface::deca_signature(*deca, scheme, c.n);
    out["deca"] = {{"w", deca->w},
                   {"l", deca->l},
                   {"lq", roofsurface::lq(*deca, scheme)},
                   {"bpv", roofsurface::expected_bpv(*deca, scheme)}};
  } else {
    sig = roofsurface::signature_for_software(scheme, vo_tile, c.n);
    out["vo_tile"] = vo_tile;
  }
  const auto r = roofsurface::rates(target, sig);
  out["signature"] = {{"ai_xm", sig.ai_xm}, {"ai_xv", sig.ai_xv}, {"n", sig.n}};
  out["rates_tiles_per_s"] = {{"mem", r.mem}, {"vec", r.vec}, {"mtx", r.mtx}};
  out["tps"] = roofsurface::tps(target, sig);
  out["flops"] = roofsurface::flops(target, sig, c.n);
  out["roofline_flops"] = roofsurface::roofline_flops(target, sig, c.n);
  out["region"] = region_json(roofsurface::classify(target, sig));
  out["compression_factor"] = formats::compression_factor(scheme);
  out["bytes_per_tile"] = formats::bytes_per_tile(scheme);
  emit(c.output, dump(out));
}

// bord ----------------------------------------------------------------------

void cmd_bord(const Common& c, const std::string& portfolio_path, double vos_mult, double mbw_mult,
              const std::string& lines_path) {
  require(!c.output.empty(), "--output is required");
  require_format(c, {"csv"});
  const auto base = load_machine(c);
  const auto portfolio = io::portfolio_from_json(load_json_arg(portfolio_path, "portfolio"));
  const auto deca = parse_deca(c.deca);
  const auto machine = roofsurface::scale_machine(base, vos_mult, mbw_mult);

  // With --deca, PE-supported kernels move to the accelerator and the vector
  // ceiling becomes one vOp per core-cycle.
  const auto pe_machine = roofsurface::with_deca(machine);
  io::CsvWriter points({"label", "engine", "ai_xm", "ai_xv", "region", "binding_set", "flops"});
  for (const auto& k : portfolio.kernels) {
    const bool on_pe = deca && dse::deca_supported(k.scheme);
    if (!on_pe) require(k.vo_tile > 0, "kernel '" + k.label + "' has no vo_tile for the software path");
    const auto& m = on_pe ? pe_machine : machine;
    const auto sig = on_pe ? roofsurface::deca_signature(*deca, k.scheme, c.n)
                           : roofsurface::signature_for_software(k.scheme, k.vo_tile, c.n);
    const auto region = roofsurface::classify(m, sig);
    points.row({k.label, on_pe ? "deca" : "software", format_double(sig.ai_xm), format_double(sig.ai_xv),
                std::string(roofsurface::bound_name(region.primary)), region.binding_set(),
                format_double(roofsurface::flops(m, sig, c.n))});
  }

  io::CsvWriter lines({"machine", "boundary", "kind", "value"});
  const auto add_lines = [&](const roofsurface::MachineConfig& m) {
    const auto b = roofsurface::bord_boundaries(m);
    lines.row({m.label, "MEM|VEC", "slope", format_double(b.mem_vec_slope)});
    lines.row({m.label, "MEM|MTX", "x", format_double(b.mem_mtx_x)});
    lines.row({m.label, "VEC|MTX", "y", format_double(b.vec_mtx_y)});
  };
  add_lines(machine);
  if (deca) add_lines(pe_machine);

  emit(c.output, points.str());
  emit(lines_path.empty() ? c.output + ".lines.csv" : lines_path, lines.str());
}

// surface -------------------------------------------------------------------

void cmd_surface(const Common& c, const std::string& xs, const std::string& ys) {
  require(!c.output.empty(), "--output is required");
  require_format(c, {"csv"});
  const auto machine = load_machine(c);
  const auto xg = parse_grid(xs, "--ai-xm");
  const auto yg = parse_grid(ys, "--ai-xv");
  const auto mesh = roofsurface::surface_mesh(machine, xg, yg, c.n);
  io::CsvWriter csv({"x", "y", "flops", "region", "binding_set"});
  for (const auto& p : mesh) {
    csv.row({format_double(p.x), format_double(p.y), format_double(p.flops),
             std::string(roofsurface::bound_name(p.region.primary)), p.region.binding_set()});
  }
  emit(c.output, csv.str());
}

// simulate / ablate ----------------------------------------------------------

struct SimArgs {
  std::string mode = "DECA_TEPL";
  std::string input;
  int prefetch = 0;
  std::string tout = "direct";
  std::int64_t comm = 10;
  std::int64_t mem_latency = 200;
  double vo_tile = 0;
  std::size_t tiles = 1000;
  long long warmup = -1;
};

pipesim::SimConfig sim_config(const Common& c, const SimArgs& a) {
  pipesim::SimConfig cfg;
  cfg.mode = pipesim::parse_mode(a.mode);
  cfg.prefetch_depth = a.prefetch;
  require(a.tout == "direct" || a.tout == "l2", "--tout must be 'direct' or 'l2'");
  cfg.tout_direct = a.tout == "direct";
  cfg.comm_latency_cycles = a.comm;
  cfg.mem_latency_cycles = a.mem_latency;
  cfg.vo_tile_software = a.vo_tile;
  cfg.n = c.n;
  cfg.tiles = a.tiles;
  cfg.seed = c.seed;
  return cfg;
}

json config_json(const pipesim::SimConfig& cfg) {
  return {{"mode", pipesim::mode_name(cfg.mode)},
          {"mem_latency_cycles", cfg.mem_latency_cycles},
          {"prefetch_depth", cfg.prefetch_depth},
          {"tout_direct", cfg.tout_direct},
          {"comm_latency_cycles", cfg.comm_latency_cycles},
          {"vo_tile_software", cfg.vo_tile_software},
          {"n", cfg.n},
          {"tiles", cfg.tiles},
          {"seed", cfg.seed}};
}

std::size_t warmup_for(const SimArgs& a, std::size_t tiles) {
  return a.warmup >= 0 ? static_cast<std::size_t>(a.warmup) : tiles / 10;
}

void cmd_simulate(const Common& c, const SimArgs& a) {
  require_format(c, {"json"});
  const auto machine = load_machine(c);
  const auto deca = parse_deca(c.deca).value_or(roofsurface::DecaParams{});
  pipesim::SimConfig cfg = sim_config(c, a);

  std::optional<pipesim::TileStream> stream;
  if (!a.input.empty()) {
    require(c.scheme.empty(), "--scheme and --input are mutually exclusive");
    stream = pipesim::TileStream::from_matrix(formats::decode_matrix(io::read_file(a.input)));
    cfg.tiles = stream->size();
  } else {
    cfg.validate();
    stream = pipesim::TileStream::synthetic(load_scheme(c), cfg.tiles, cfg.seed);
  }
  const auto report = pipesim::run(machine, deca, *stream, cfg);
  const std::size_t warmup = warmup_for(a, report.tiles_done);
  const double steady = pipesim::steady_throughput(report, warmup);

  json out = {{"machine", io::to_json(machine)},
              {"scheme", io::to_json(stream->scheme())},
              {"config", config_json(cfg)},
              {"report", io::to_json(report)},
              {"warmup_tiles", warmup},
              {"steady_tiles_per_cycle", steady}};
  if (cfg.mode != pipesim::Mode::SOFTWARE) {
    out["deca"] = {{"w", deca.w}, {"l", deca.l}};
    const auto pe = roofsurface::with_deca(machine);
    const auto sig = roofsurface::deca_signature(deca, stream->scheme(), cfg.n);
    const double sim_tps = steady * machine.freq_hz * machine.cores;
    const double model_tps = roofsurface::tps(pe, sig);
    out["model"] = {{"sim_tps", sim_tps},
                    {"model_tps", model_tps},
                    {"ratio", sim_tps / model_tps},
                    {"region", region_json(roofsurface::classify(pe, sig))}};
  }
  emit(c.output, dump(out));
}

void cmd_ablate(const Common& c, const SimArgs& a) {
  require_format(c, {"json", "csv"});
  const auto machine = load_machine(c);
  const auto scheme = load_scheme(c);
  const auto deca = parse_deca(c.deca).value_or(roofsurface::DecaParams{});
  require(a.vo_tile > 0, "ablate needs --vo-tile for the SOFTWARE baseline");
  pipesim::SimConfig cfg = sim_config(c, a);
  cfg.validate();
  const auto table = pipesim::compare_modes(machine, deca, scheme, cfg, warmup_for(a, cfg.tiles));
  const auto ladder = pipesim::ablation_ladder(table);
  static const char* const kSteps[] = {"fence+L2", "+prefetch", "+TOut regs", "+TEPL"};

  if (c.format == "csv") {
    io::CsvWriter csv({"table", "step", "mode", "prefetch_depth", "tout_direct", "steady_tiles_per_cycle",
                       "speedup_vs_software"});
    const auto add = [&](const char* table_name, const std::string& step, const pipesim::ModeRun& r) {
      csv.row({table_name, step, std::string(pipesim::mode_name(r.mode)), std::to_string(r.prefetch_depth),
               r.tout_direct ? "1" : "0", format_double(r.steady_tiles_per_cycle),
               format_double(r.speedup_vs_software)});
    };
    for (const auto& r : table) add("modes", "", r);
    for (std::size_t i = 0; i < ladder.size(); ++i) add("ladder", kSteps[i], ladder[i]);
    emit(c.output, csv.str());
    return;
  }
  json modes = json::array();
  for (const auto& r : table) modes.push_back(io::to_json(r));
  json steps = json::array();
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    json step = io::to_json(ladder[i]);
    step["step"] = kSteps[i];
    steps.push_back(step);
  }
  emit(c.output, dump({{"machine", io::to_json(machine)},
                       {"scheme", io::to_json(scheme)},
                       {"deca", {{"w", deca.w}, {"l", deca.l}}},
                       {"config", config_json(cfg)},
                       {"modes", modes},
                       {"ladder", steps}}));
}

// dse -----------------------------------------------------------------------

void cmd_dse(const Common& c, const std::string& portfolio_path, const std::string& w_grid,
             const std::string& l_grid, const std::string& selection_path) {
  require_format(c, {"csv", "json"});
  const auto machine = load_machine(c);
  const auto portfolio = io::portfolio_from_json(load_json_arg(portfolio_path, "portfolio"));
  const auto ws = parse_int_list(w_grid, "--w-grid");
  const auto ls = parse_int_list(l_grid, "--l-grid");
  const auto kernels = dse::deca_subset(portfolio.kernels);
  const auto points = dse::sweep(machine, kernels, ws, ls, c.n);

  if (c.format == "json") {
    json arr = json::array();
    for (const auto& p : points) {
      json per = json::array();
      for (const auto& k : p.per_kernel) {
        per.push_back({{"label", k.label}, {"region", region_json(k.region)}, {"flops", k.flops}});
      }
      arr.push_back({{"w", p.deca.w},
                     {"l", p.deca.l},
                     {"lut_entries", p.cost.lut_entries},
                     {"clears_vec", p.clears_vec},
                     {"kernels", per}});
    }
    emit(c.output, dump({{"points", arr}}));
  } else {
    std::vector<std::string> header = {"W", "L", "lut_entries", "clears_vec", "vec_bound"};
    for (const auto& k : kernels) header.push_back(k.label);
    io::CsvWriter csv(header);
    for (const auto& p : points) {
      std::vector<std::string> row = {std::to_string(p.deca.w), std::to_string(p.deca.l),
                                      std::to_string(p.cost.lut_entries), p.clears_vec ? "1" : "0",
                                      std::to_string(p.vec_bound_count())};
      for (const auto& k : p.per_kernel) row.push_back(k.region.binding_set());
      csv.row(row);
    }
    emit(c.output, csv.str());
  }

  const auto chosen = dse::select_minimal(points);
  const json sel = {{"machine", machine.label},
                    {"portfolio", portfolio.label},
                    {"kernels", kernels.size()},
                    {"w", chosen.w},
                    {"l", chosen.l},
                    {"lut_entries", chosen.lut_entries()}};
  if (selection_path.empty()) {
    std::cerr << "selected W=" << chosen.w << " L=" << chosen.l << "\n";
  } else {
    emit(selection_path, dump(sel));
  }
}

void add_common(CLI::App* sub, Common& c, bool machine, bool scheme) {
  if (machine) sub->add_option("--machine", c.machine, "Machine config JSON file (or inline JSON)");
  if (scheme) sub->add_option("--scheme", c.scheme, "Compression scheme JSON file (or inline JSON)");
  sub->add_option("-o,--output", c.output, "Output path ('-' or omitted: stdout where allowed)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed GeMM modeling toolkit"};
  app.require_subcommand(1);

  Common c;
  SimArgs sim;
  std::string input;
  std::string portfolio;
  std::string lines;
  std::string xs;
  std::string ys;
  std::string w_grid = "8,16,32,64";
  std::string l_grid = "4,8,16,32,64";
  std::string selection;
  bool pad = false;
  double vos_mult = 1.0;
  double mbw_mult = 1.0;

  auto* compress = app.add_subcommand("compress", "Compress a raw BF16 matrix into a DCAW file");
  add_common(compress, c, false, true);
  compress->add_option("-i,--input", input, "Raw matrix: u32 rows, u32 cols, BF16 LE payload");
  compress->add_flag("--pad", pad, "Zero-pad to whole 16x32 tiles instead of failing");

  auto* inspect = app.add_subcommand("inspect", "Summarize a DCAW file");
  add_common(inspect, c, false, false);
  inspect->add_option("-i,--input", input, "DCAW file");

  auto* analyze = app.add_subcommand("analyze", "Evaluate the Roof-Surface model for one kernel");
  add_common(analyze, c, true, true);
  analyze->add_option("--deca", c.deca, "Accelerator W,L");
  analyze->add_option("--vo-tile", sim.vo_tile, "Software vector ops per tile");
  analyze->add_option("--n", c.n, "Batch rows (1-16)");

  auto* bord = app.add_subcommand("bord", "Bounding-region diagram points and boundary lines");
  add_common(bord, c, true, false);
  bord->add_option("--portfolio", portfolio, "Kernel portfolio JSON");
  bord->add_option("--deca", c.deca, "Place supported kernels on an accelerator with W,L");
  bord->add_option("--vos-mult", vos_mult, "Scale vector throughput");
  bord->add_option("--mbw-mult", mbw_mult, "Scale memory bandwidth");
  bord->add_option("--lines-output", lines, "Boundary CSV (default: <output>.lines.csv)");
  bord->add_option("--n", c.n, "Batch rows (1-16)");

  auto* surface = app.add_subcommand("surface", "Roof-Surface mesh");
  add_common(surface, c, true, false);
  surface->add_option("--ai-xm", xs, "Grid: 'a,b,c' or log-spaced 'lo:hi:count'");
  surface->add_option("--ai-xv", ys, "Grid: 'a,b,c' or log-spaced 'lo:hi:count'");
  surface->add_option("--n", c.n, "Batch rows (1-16)");

  const auto add_sim = [&](CLI::App* sub) {
    add_common(sub, c, true, true);
    sub->add_option("--deca", c.deca, "Accelerator W,L (default 32,8)");
    sub->add_option("--mode", sim.mode, "SOFTWARE, DECA_FENCE or DECA_TEPL");
    sub->add_option("--prefetch", sim.prefetch, "Prefetch depth in tiles (0 = off)");
    sub->add_option("--tout", sim.tout, "TOut read path: direct or l2");
    sub->add_option("--comm", sim.comm, "Core/accelerator register access cycles");
    sub->add_option("--mem-latency", sim.mem_latency, "Memory latency in cycles");
    sub->add_option("--vo-tile", sim.vo_tile, "Software vector ops per tile");
    sub->add_option("--tiles", sim.tiles, "Synthetic stream length");
    sub->add_option("--warmup", sim.warmup, "Tiles dropped before measuring (default tiles/10)");
    sub->add_option("--seed", c.seed, "Synthetic stream seed");
    sub->add_option("--n", c.n, "Batch rows (1-16)");
  };
  auto* simulate = app.add_subcommand("simulate", "Run the decompression pipeline simulator");
  add_sim(simulate);
  simulate->add_option("-i,--input", sim.input, "Stream the tiles of a DCAW file");
  auto* ablate = app.add_subcommand("ablate", "Compare invocation modes and the feature ladder");
  add_sim(ablate);

  auto* dse_cmd = app.add_subcommand("dse", "Sweep accelerator {W, L} over a portfolio");
  add_common(dse_cmd, c, true, false);
  dse_cmd->add_option("--portfolio", portfolio, "Kernel portfolio JSON");
  dse_cmd->add_option("--w-grid", w_grid, "Comma-separated W values");
  dse_cmd->add_option("--l-grid", l_grid, "Comma-separated L values");
  dse_cmd->add_option("--selection", selection, "Write the chosen pair as JSON here");
  dse_cmd->add_option("--n", c.n, "Batch rows (1-16)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << error_code_name(ErrorCode::kInvalidArgument) << ": " << e.what() << "\n";
    return 2;
  }

  try {
    if (*compress) cmd_compress(c, input, pad);
    if (*inspect) cmd_inspect(c, input);
    if (*analyze) cmd_analyze(c, sim.vo_tile);
    if (*bord) cmd_bord(c, portfolio, vos_mult, mbw_mult, lines);
    if (*surface) cmd_surface(c, xs, ys);
    if (*simulate) cmd_simulate(c, sim);
    if (*ablate) cmd_ablate(c, sim);
    if (*dse_cmd) cmd_dse(c, portfolio, w_grid, l_grid, selection);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_code_name(ErrorCode::kIo) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
