#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rti {

enum class ErrorCode {
  MissingFile,
  DimensionMismatch,
  MalformedLpLine,
  NonHemisphericalLight,
  EmptyTrainSet,
  FractionOutOfRange,
  EmptyTrainingSet,
  TeacherUntrained,
  AlphaOutOfRange,
  RankDeficientLights,
  OrderUnsupported,
  NonFiniteLatent,
  IoError,
  ShapeMismatch,
  SchemaViolation,
  PlaneDimensionMismatch,
  CountMismatch,
  ImageTooSmall,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rti
