#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treesel {

enum class ErrorKind {
  DimensionMismatch,
  NotObservable,
  NonPositiveNoise,
  NotPositiveDefinite,
  InvalidSubtree,
  InvalidTree,
  InvalidDistribution,
  SingularMatrix,
  Diverged,
  MaxIterations,
  OrderingViolated,
  SolverStalled,
  InitialDiverged,
  TooManyTrees,
  UnstableDiscretization,
  OutOfRegion,
  AgreementViolation,
  InvalidArgument,
  Io,
  Parse,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotObservable: return "NotObservable";
    case ErrorKind::NonPositiveNoise: return "NonPositiveNoise";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvalidSubtree: return "InvalidSubtree";
    case ErrorKind::InvalidTree: return "InvalidTree";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::OrderingViolated: return "OrderingViolated";
    case ErrorKind::SolverStalled: return "SolverStalled";
    case ErrorKind::InitialDiverged: return "InitialDiverged";
    case ErrorKind::TooManyTrees: return "TooManyTrees";
    case ErrorKind::UnstableDiscretization: return "UnstableDiscretization";
    case ErrorKind::OutOfRegion: return "OutOfRegion";
    case ErrorKind::AgreementViolation: return "AgreementViolation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace treesel
