#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhm {

enum class ErrorCode {
  kInvalidArgument,
  kInfeasibleParams,
  kCapExceeded,
  kImpossibleEvidence,
  kMissingLatents,
  kInsufficientData,
  kDivergent,
  kIo,
  kInvalidConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries a stable code so the CLI can
// emit a machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace rhm
