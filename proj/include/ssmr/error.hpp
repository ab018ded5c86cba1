#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssmr {

enum class ErrorKind {
  InvalidDegreeRange,
  DimensionMismatch,
  SingularMassMatrix,
  UnstableLinearization,
  SpectralGapViolation,
  NonFiniteState,
  EmptyResult,
  TooShortTrajectory,
  InconsistentDims,
  InconsistentSampling,
  RankDeficientData,
  IllConditionedRegression,
  RankDeficientExcitation,
  InfeasibleHardConstraints,
  Infeasible,
  NoProgress,
  ControllerFault,
  InvalidArgument,
  IoError,
  ParseError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDegreeRange: return "invalid-degree-range";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::SingularMassMatrix: return "singular-mass-matrix";
    case ErrorKind::UnstableLinearization: return "unstable-linearization";
    case ErrorKind::SpectralGapViolation: return "spectral-gap-violation";
    case ErrorKind::NonFiniteState: return "non-finite-state";
    case ErrorKind::EmptyResult: return "empty-result";
    case ErrorKind::TooShortTrajectory: return "too-short-trajectory";
    case ErrorKind::InconsistentDims: return "inconsistent-dims";
    case ErrorKind::InconsistentSampling: return "inconsistent-sampling";
    case ErrorKind::RankDeficientData: return "rank-deficient-data";
    case ErrorKind::IllConditionedRegression: return "ill-conditioned-regression";
    case ErrorKind::RankDeficientExcitation: return "rank-deficient-excitation";
    case ErrorKind::InfeasibleHardConstraints: return "infeasible-hard-constraints";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::NoProgress: return "no-progress";
    case ErrorKind::ControllerFault: return "controller-fault";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::IoError: return "io-error";
    case ErrorKind::ParseError: return "parse-error";
  }
  return "unknown";
}

/// Exception carrying a machine-checkable error kind. The message is
/// prefixed with the kind tag, e.g. "dimension-mismatch: x has 3 entries".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace ssmr
