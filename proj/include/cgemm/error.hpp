#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cgemm {

enum class ErrorCode {
  kInvalidArgument,
  kStructuralCorruption,
  kUnsupported,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kNoFeasibleDesign,
  kIo,
};

// Stable, machine-parsable spelling used by the CLI on stderr.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace cgemm
