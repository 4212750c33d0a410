#pragma once

// JSON/CSV plumbing shared by the command-line tool and the test harnesses.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cgemm/dse.hpp"
#include "cgemm/formats.hpp"
#include "cgemm/pipesim.hpp"
#include "cgemm/roofsurface.hpp"

namespace cgemm::io {

using json = nlohmann::json;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& contents);

json parse_json(std::string_view text, const std::string& what);
json read_json_file(const std::filesystem::path& path);

roofsurface::MachineConfig machine_from_json(const json& j);
json to_json(const roofsurface::MachineConfig& machine);

formats::CompressionScheme scheme_from_json(const json& j);
json to_json(const formats::CompressionScheme& scheme);

struct Portfolio {
  std::string label;
  std::vector<dse::Kernel> kernels;
};
Portfolio portfolio_from_json(const json& j);

json to_json(const pipesim::SimReport& report);
json to_json(const pipesim::ModeRun& row);

// Shortest round-trip decimal form, independent of locale.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(std::vector<std::string> fields);
  [[nodiscard]] const std::string& str() const noexcept { return out_; }

 private:
  void line(const std::vector<std::string>& fields);
  std::size_t columns_;
  std::string out_;
};

// Worker count: ROOFSURFACE_THREADS when set to a positive integer, else the
// hardware concurrency.
unsigned thread_count();
// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any job is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cgemm::io
