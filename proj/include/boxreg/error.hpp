// SPDX-License-Identifier: Apache-2.0

#ifndef BOXREG_ERROR_HPP_
#define BOXREG_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace boxreg {

enum class ErrorCode {
  kNonFiniteCoordinate,
  kNonCanonicalBox,
  kInvalidImageDims,
  kDegenerateGroundTruth,
  kDegenerateEnclosure,
  kDegenerateAspect,
  kNonSmoothPoint,
  kOutOfImage,
  kBadScale,
  kAssertionFailure,
  kDivergenceDetected,
  kSchemaError,
  kUnknownCategory,
  kIoFailure,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what callers (and the CLI) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the analytic gradient when the prediction sits on a kink of
/// a min/max selection. `coordinate` is the index (0..3 for x1,y1,x2,y2)
/// of the predicted coordinate involved in the tie.
class NonSmoothPointError : public Error {
 public:
  NonSmoothPointError(int coordinate, const std::string& message);

  int coordinate() const noexcept { return coordinate_; }

 private:
  int coordinate_;
};

/// Dataset/config validation failure. `pointer` is an RFC 6901 JSON pointer
/// to the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string pointer, const std::string& message);

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace boxreg

#endif  // BOXREG_ERROR_HPP_
