#pragma once

#include <optional>
#include <vector>

#include "quad/types.hpp"

namespace quad {

struct OcpConfig {
  int horizon_steps = 20;       // N
  double horizon_time = 1.0;    // s
  Vec13 state_weights = Vec13::Zero();  // diagonal Q: p(3), q(4), v(3), w(3)
  Vec4 input_weights = Vec4::Zero();    // diagonal R
  bool integrator_enabled = false;
  Vec3 integrator_weight = Vec3::Zero();  // reference offset per unit integrated error
  double integrator_leak = 0.0;           // 1/s
  int sqp_iters_per_step = 1;
  double qp_tolerance = 1e-10;

  double node_dt() const { return horizon_time / horizon_steps; }
  void validate() const;
};

enum class QpStatus { optimal, max_iter, infeasible };

struct Solution {
  std::vector<RotorCommand> inputs;   // N entries
  std::vector<VehicleState> states;   // N + 1 entries
  double kkt_residual = 0.0;
  QpStatus qp_status = QpStatus::optimal;
};

struct ReferenceWindow {
  std::vector<VehicleState> states;   // N + 1 samples on the node grid
  std::vector<RotorCommand> inputs;   // N feedforward entries
};

/// Jacobians of the discrete step map at (x, u) by forward finite
/// differences with per-component step max(1e-6, 1e-6 |value|). The
/// quaternion is differentiated as four raw components.
void linearize(const VehicleState& x, const RotorCommand& u, const VehicleParams& params,
               double dt, Eigen::Matrix<double, 13, 13>& a, Eigen::Matrix<double, 13, 4>& b);

/// Packs a state into the 13-vector layout used by the solver.
Vec13 pack_state(const VehicleState& x);
VehicleState unpack_state(const Vec13& v);

/// Tracking deviation x - ref with the reference quaternion sign-aligned to
/// the state (flipped when their dot product is negative).
Vec13 state_error(const VehicleState& x, const VehicleState& ref);

/// Minimizes 0.5 u'Hu + g'u subject to lo <= u <= hi by a primal active-set
/// loop starting from the feasible point u0 (clamped into the box). H must be
/// positive definite. Capped at max_iter working-set changes.
struct BoxQpResult {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
};
BoxQpResult solve_box_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& u0, double tol, int max_iter = 50);

/// Leaky accumulator for the integrator-augmented variant.
Vec3 integrator_update(const Vec3& int_state, const Vec3& pos_error, double dt,
                       const OcpConfig& cfg);

/// Multiple-shooting Gauss-Newton solver run in a real-time-iteration
/// scheme: states are rolled out with the discrete model, the QP is condensed
/// onto the inputs, and box constraints are handled by the active-set loop.
/// Stateless apart from parameters; callers own the warm start.
class SqpSolver {
 public:
  SqpSolver(VehicleParams nominal, OcpConfig cfg);

  /// One control-step solve. warm, when present, seeds the input sequence
  /// (typically the shifted previous solution). Throws SolverError on a
  /// non-finite rollout.
  Solution solve(const VehicleState& x0, const ReferenceWindow& ref,
                 const Solution* warm = nullptr) const;

  /// Nonlinear tracking cost of rolling out the given inputs from x0.
  double rollout_cost(const VehicleState& x0, const ReferenceWindow& ref,
                      const std::vector<RotorCommand>& inputs) const;

  const OcpConfig& config() const { return cfg_; }
  const VehicleParams& params() const { return params_; }

  static Solution shift_warm_start(const Solution& prev);

 private:
  std::vector<VehicleState> rollout(const VehicleState& x0,
                                    const std::vector<RotorCommand>& inputs) const;

  VehicleParams params_;
  OcpConfig cfg_;
};

}  // namespace quad
