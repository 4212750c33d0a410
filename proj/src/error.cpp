#include "cgemm/error.hpp"

namespace cgemm {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kStructuralCorruption: return "E_STRUCTURAL_CORRUPTION";
    case ErrorCode::kUnsupported: return "E_UNSUPPORTED";
    case ErrorCode::kBadMagic: return "E_BAD_MAGIC";
    case ErrorCode::kBadVersion: return "E_BAD_VERSION";
    case ErrorCode::kTruncated: return "E_TRUNCATED";
    case ErrorCode::kNoFeasibleDesign: return "E_NO_FEASIBLE_DESIGN";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace cgemm
