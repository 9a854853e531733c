#pragma once

#include <stdexcept>
#include <string>

namespace quad {

/// Numerical integration produced a non-finite state.
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// OCP solve failed (non-finite rollout or QP breakdown).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uncertainty basis too ill-conditioned to invert this step.
struct BasisSingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Observer propagation produced a non-finite prediction.
struct ObserverDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed config or track file. Carries a 1-based line number when the
/// failure is tied to a specific line (0 otherwise).
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
  int line;
};

}  // namespace quad
