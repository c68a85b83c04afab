#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netreg {

enum class ErrorCode {
  InvalidInput,
  RankDeficient,
  DegenerateAngle,
  BadPartition,
  DegreesOfFreedomExhausted,
  DegenerateDirection,
  SingularGammaCovariance,
  NoNetworkComponent,
  EmptyCommunity,
  ZeroDegreeCommunity,
  IsolatedNodes,
  SingularSystem,
  ConstraintViolation,
  DimensionMismatch,
  MissingColumn,
  NonNumericResponse,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::DegreesOfFreedomExhausted: return "DegreesOfFreedomExhausted";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::SingularGammaCovariance: return "SingularGammaCovariance";
    case ErrorCode::NoNetworkComponent: return "NoNetworkComponent";
    case ErrorCode::EmptyCommunity: return "EmptyCommunity";
    case ErrorCode::ZeroDegreeCommunity: return "ZeroDegreeCommunity";
    case ErrorCode::IsolatedNodes: return "IsolatedNodes";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericResponse: return "NonNumericResponse";
  }
  return "Unknown";
}

/// Input errors map to CLI exit code 2, everything else is numerical (exit 3).
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput:
    case ErrorCode::EmptyCommunity:
    case ErrorCode::ZeroDegreeCommunity:
    case ErrorCode::IsolatedNodes:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingColumn:
    case ErrorCode::NonNumericResponse:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netreg
