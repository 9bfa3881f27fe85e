#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ebk {

enum class ErrorCode {
  InvalidArgument,
  InvalidSymbol,
  PreimageNotEnclosed,
  NonCompactWindow,
  IrregularWindow,
  EmptyLevelSet,
  NotClosedOrbit,
  TraceDiverged,
  NonConstantTopology,
  NotSimple,
  DegenerateCaustic,
  NotDiffeomorphism,
  InconsistentAction,
  OutOfWindow,
  UnsafeEndpoint,
  EmptySpectrum,
  DomainTooSmall,
  InverseIterationFailed,
  BijectionFailure,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Violations of the geometric hypotheses (regular window, compact preimage,
// constant topology). The CLI maps these to exit code 3.
bool is_hypothesis_violation(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ebk
