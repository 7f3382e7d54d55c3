// SPDX-License-Identifier: Apache-2.0

#include "boxreg/error.hpp"

namespace boxreg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::kNonCanonicalBox: return "NonCanonicalBox";
    case ErrorCode::kInvalidImageDims: return "InvalidImageDims";
    case ErrorCode::kDegenerateGroundTruth: return "DegenerateGroundTruth";
    case ErrorCode::kDegenerateEnclosure: return "DegenerateEnclosure";
    case ErrorCode::kDegenerateAspect: return "DegenerateAspect";
    case ErrorCode::kNonSmoothPoint: return "NonSmoothPoint";
    case ErrorCode::kOutOfImage: return "OutOfImage";
    case ErrorCode::kBadScale: return "BadScale";
    case ErrorCode::kAssertionFailure: return "AssertionFailure";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

NonSmoothPointError::NonSmoothPointError(int coordinate, const std::string& message)
    : Error(ErrorCode::kNonSmoothPoint, message), coordinate_(coordinate) {}

SchemaError::SchemaError(std::string pointer, const std::string& message)
    : Error(ErrorCode::kSchemaError, pointer + ": " + message), pointer_(std::move(pointer)) {}

}  // namespace boxreg
