#include "cgemm/io.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>

#include "cgemm/error.hpp"

namespace cgemm::io {
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::kIo, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

void write_file_atomic(const fs::path& path, const std::vector<std::uint8_t>& contents) {
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(contents.data()), contents.size()));
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, what + ": " + e.what());
  }
}

json read_json_file(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

namespace {

template <typename T>
T field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + " is missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + " field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const char* what) {
  return j.is_object() && j.contains(key) ? field<T>(j, key, what) : fallback;
}

}  // namespace

roofsurface::MachineConfig machine_from_json(const json& j) {
  roofsurface::MachineConfig m;
  m.label = field_or<std::string>(j, "label", "machine", "machine config");
  m.freq_hz = field<double>(j, "freq_hz", "machine config");
  m.cores = field<int>(j, "cores", "machine config");
  m.simd_units_per_core = field<double>(j, "simd_units_per_core", "machine config");
  m.tmul_cycles = field_or<int>(j, "tmul_cycles", roofsurface::kTmulCycles, "machine config");
  m.mem_bw = field<double>(j, "mem_bw", "machine config");
  m.validate();
  return m;
}

json to_json(const roofsurface::MachineConfig& m) {
  return {{"label", m.label},
          {"freq_hz", m.freq_hz},
          {"cores", m.cores},
          {"simd_units_per_core", m.simd_units_per_core},
          {"tmul_cycles", m.tmul_cycles},
          {"mem_bw", m.mem_bw}};
}

formats::CompressionScheme scheme_from_json(const json& j) {
  const auto format = formats::parse_format(field<std::string>(j, "format", "scheme"));
  const bool bitmask = field_or<bool>(j, "bitmask", true, "scheme");
  formats::CompressionScheme s = bitmask ? formats::CompressionScheme::make(format, field<double>(j, "density", "scheme"))
                                         : formats::CompressionScheme::uncompressed_bf16();
  if (!bitmask) {
    require(format == formats::QuantFormat::BF16, "only BF16 has a mask-free layout");
    require(field_or<double>(j, "density", 1.0, "scheme") == 1.0, "a mask-free layout is dense");
  }
  s.group_size = field_or<int>(j, "group_size", s.group_size, "scheme");
  s.scale_bits = field_or<int>(j, "scale_bits", s.scale_bits, "scheme");
  s.validate();
  return s;
}

json to_json(const formats::CompressionScheme& s) {
  return {{"format", formats::format_name(s.format)},
          {"density", s.density},
          {"group_size", s.group_size},
          {"scale_bits", s.scale_bits},
          {"bitmask", s.bitmask},
          {"label", s.label()}};
}

Portfolio portfolio_from_json(const json& j) {
  Portfolio p;
  p.label = field_or<std::string>(j, "label", "portfolio", "portfolio");
  const json kernels = field<json>(j, "kernels", "portfolio");
  require(kernels.is_array(), "portfolio 'kernels' must be an array");
  for (const json& k : kernels) {
    dse::Kernel kernel;
    kernel.scheme = scheme_from_json(field<json>(k, "scheme", "kernel"));
    kernel.label = field_or<std::string>(k, "label", kernel.scheme.label(), "kernel");
    kernel.vo_tile = field_or<double>(k, "vo_tile", 0.0, "kernel");
    require(kernel.vo_tile >= 0, "kernel vo_tile must be non-negative");
    p.kernels.push_back(std::move(kernel));
  }
  return p;
}

json to_json(const pipesim::SimReport& r) {
  json stalls = json::object();
  for (const auto& [cause, cycles] : r.stall_cycles_by_cause) stalls[std::string(pipesim::stall_cause_name(cause))] = cycles;
  return {{"total_cycles", r.total_cycles},
          {"tiles_done", r.tiles_done},
          {"tiles_per_cycle", r.tiles_per_cycle},
          {"vops_issued", r.vops_issued},
          {"bubbles_observed", r.bubbles_observed},
          {"stall_cycles_by_cause", stalls},
          {"utilization",
           {{"mem_bw_frac", r.utilization.mem_bw_frac},
            {"vec_frac", r.utilization.vec_frac},
            {"tmul_frac", r.utilization.tmul_frac}}},
          {"output_digest", r.output_digest},
          {"functional_mismatches", r.functional_mismatches}};
}

json to_json(const pipesim::ModeRun& row) {
  return {{"mode", pipesim::mode_name(row.mode)},
          {"prefetch_depth", row.prefetch_depth},
          {"tout_direct", row.tout_direct},
          {"steady_tiles_per_cycle", row.steady_tiles_per_cycle},
          {"speedup_vs_software", row.speedup_vs_software}};
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { line(header); }

CsvWriter& CsvWriter::row(std::vector<std::string> fields) {
  require(fields.size() == columns_, "CSV row width does not match the header");
  line(fields);
  return *this;
}

void CsvWriter::line(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ += f;
      continue;
    }
    out_ += '"';
    for (char c : f) {
      if (c == '"') out_ += '"';
      out_ += c;
    }
    out_ += '"';
  }
  out_ += '\n';
}

unsigned thread_count() {
  if (const char* env = std::getenv("ROOFSURFACE_THREADS")) {
    unsigned v = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size() && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cgemm::io
