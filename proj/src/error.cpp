#include "ebk/error.hpp"

namespace ebk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSymbol: return "InvalidSymbol";
    case ErrorCode::PreimageNotEnclosed: return "PreimageNotEnclosed";
    case ErrorCode::NonCompactWindow: return "NonCompactWindow";
    case ErrorCode::IrregularWindow: return "IrregularWindow";
    case ErrorCode::EmptyLevelSet: return "EmptyLevelSet";
    case ErrorCode::NotClosedOrbit: return "NotClosedOrbit";
    case ErrorCode::TraceDiverged: return "TraceDiverged";
    case ErrorCode::NonConstantTopology: return "NonConstantTopology";
    case ErrorCode::NotSimple: return "NotSimple";
    case ErrorCode::DegenerateCaustic: return "DegenerateCaustic";
    case ErrorCode::NotDiffeomorphism: return "NotDiffeomorphism";
    case ErrorCode::InconsistentAction: return "InconsistentAction";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::UnsafeEndpoint: return "UnsafeEndpoint";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::InverseIterationFailed: return "InverseIterationFailed";
    case ErrorCode::BijectionFailure: return "BijectionFailure";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_hypothesis_violation(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::PreimageNotEnclosed:
    case ErrorCode::NonCompactWindow:
    case ErrorCode::IrregularWindow:
    case ErrorCode::NonConstantTopology:
    case ErrorCode::NotDiffeomorphism:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace ebk
