#pragma once

#include <stdexcept>
#include <string>

namespace owdcl {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  DegenerateVariance,
  EmptyBatch,
  NonFiniteLoss,
  InsufficientClassSamples,
  AngleOutOfRange,
  EmptyPrototypeBank,
  LabelNotInBank,
  EmptyCenters,
  NonUnitNorm,
  SpecInvalid,
  IoError,
  FormatError,
  UndefinedMetric,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps these to
/// `error[<code>]: <message>` lines on stderr and a nonzero exit.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace owdcl
