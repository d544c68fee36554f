#pragma once

#include <stdexcept>
#include <string>

namespace ocs {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyMask,
  kDegenerateScale,
  kInvalidThresholds,
  kNoOverlap,
  kEmptyRing,
  kEmptyInput,
  kInfeasibleConfig,
  kMissingAsset,
  kDecodeFailure,
  kIoFailure,
  kTimeout,
  kProtocolError,
  kServiceRejection,
  kServiceUnavailable,
  kAllMissing,
  kUnorganized,
  kNoHorizontalPlane,
  kEmptyScene,
  kEmptyRealSubset,
  kInsufficient,
  kNoGroundTruth,
  kConfigError,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so the
// CLI can map it onto an exit category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ocs
