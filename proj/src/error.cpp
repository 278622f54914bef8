#include "owdcl/error.hpp"

namespace owdcl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientClassSamples: return "InsufficientClassSamples";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::EmptyPrototypeBank: return "EmptyPrototypeBank";
    case ErrorCode::LabelNotInBank: return "LabelNotInBank";
    case ErrorCode::EmptyCenters: return "EmptyCenters";
    case ErrorCode::NonUnitNorm: return "NonUnitNorm";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace owdcl
