#pragma once
#include <stdexcept>
#include <string>

namespace hklab {

enum class ErrorKind {
  Validation,            // malformed input, violated precondition
  PoleSingularity,
  NonConvergent,
  WindowTooNarrow,
  NotNearPole,
  SlopeMismatch,
  NonpositivePotential,
  DegenerateTriple,
  NegativeSquare,
  ChartContainsPole,
  QuadratureBudgetExceeded,
  TailNotIntegrable,
  GrowthModeRejected,
  InfeasibleWeights,
  NonpositiveT,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::PoleSingularity: return "PoleSingularity";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::WindowTooNarrow: return "WindowTooNarrow";
    case ErrorKind::NotNearPole: return "NotNearPole";
    case ErrorKind::SlopeMismatch: return "SlopeMismatch";
    case ErrorKind::NonpositivePotential: return "NonpositivePotential";
    case ErrorKind::DegenerateTriple: return "DegenerateTriple";
    case ErrorKind::NegativeSquare: return "NegativeSquare";
    case ErrorKind::ChartContainsPole: return "ChartContainsPole";
    case ErrorKind::QuadratureBudgetExceeded: return "QuadratureBudgetExceeded";
    case ErrorKind::TailNotIntegrable: return "TailNotIntegrable";
    case ErrorKind::GrowthModeRejected: return "GrowthModeRejected";
    case ErrorKind::InfeasibleWeights: return "InfeasibleWeights";
    case ErrorKind::NonpositiveT: return "NonpositiveT";
  }
  return "Unknown";
}

// Numerical-budget failures map to CLI exit code 3, everything else to 2.
inline bool is_budget_failure(ErrorKind k) {
  return k == ErrorKind::NonConvergent || k == ErrorKind::QuadratureBudgetExceeded ||
         k == ErrorKind::TailNotIntegrable || k == ErrorKind::NegativeSquare;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& what)
      : std::runtime_error(std::string(kind_name(k)) + ": " + what), kind_(k) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::Validation, msg);
}

}  // namespace hklab
