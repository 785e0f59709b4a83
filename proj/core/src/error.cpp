#include "rti/error.hpp"

namespace rti {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedLpLine: return "MalformedLpLine";
    case ErrorCode::NonHemisphericalLight: return "NonHemisphericalLight";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::TeacherUntrained: return "TeacherUntrained";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::RankDeficientLights: return "RankDeficientLights";
    case ErrorCode::OrderUnsupported: return "OrderUnsupported";
    case ErrorCode::NonFiniteLatent: return "NonFiniteLatent";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::PlaneDimensionMismatch: return "PlaneDimensionMismatch";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rti
