#pragma once

#include "quad/types.hpp"

namespace quad {

struct L1Config {
  Vec6 As_diag = Vec6::Zero();     // 1/s, diagonal Hurwitz error feedback, all < 0
  Vec4 cutoff = Vec4::Zero();      // rad/s, first-order filter cutoff per matched channel
  double Ts = 0.0;                 // s, adaptation period
  Vec6 sigma_clip = Vec6::Zero();  // per-channel bound on the estimates (4 matched, 2 unmatched)

  void validate() const;
};

struct L1State {
  Vec6 z_hat = Vec6::Zero();       // predicted [v_WB; omega_B]
  Vec4 sigma_m = Vec4::Zero();     // matched estimate, rotor-thrust space (N)
  Vec2 sigma_um = Vec2::Zero();    // unmatched estimate (body x/y force, N)
  Vec4 u_l1_prev = Vec4::Zero();   // last filtered command (N)
};

/// Control-effectiveness decomposition at the current attitude. g_mat maps
/// rotor thrusts into [v_dot; omega_dot], g_perp the two uncontrollable
/// force directions, f_vec the nominal-model acceleration under the current
/// command.
struct UncertaintyBasis {
  Eigen::Matrix<double, 6, 4> g_mat;
  Eigen::Matrix<double, 6, 2> g_perp;
  Vec6 f_vec;
};

/// Reduced measurement [v_WB; omega_B] of a state.
Vec6 measured_z(const VehicleState& state);

/// Builds the basis from the nominal parameters (never the true plant).
UncertaintyBasis build_basis(const VehicleState& state, const RotorCommand& u_mpc,
                             const VehicleParams& params);

struct AdaptResult {
  Vec4 sigma_m = Vec4::Zero();
  Vec2 sigma_um = Vec2::Zero();
  bool clipped = false;
};

/// Piecewise-constant adaptation: solves for the estimates that explain the
/// prediction error over one period. Throws BasisSingularError when the 6x6
/// basis has condition number >= 1e8.
AdaptResult adapt(const Vec6& z_hat, const Vec6& z_measured, const UncertaintyBasis& basis,
                  const L1Config& cfg);

/// Discrete first-order low-pass control law, element-wise per channel.
Vec4 filter_step(const Vec4& u_prev, const Vec4& sigma_m, const L1Config& cfg);

/// One Euler step of the prediction model plus error feedback. Throws
/// ObserverDivergedError when the result is non-finite.
Vec6 observer_step(const L1State& st, const UncertaintyBasis& basis, const Vec4& u_l1,
                   const Vec6& z_measured, const L1Config& cfg);

/// Adds the adaptive command to the baseline thrusts and clamps to the
/// actuator box. Second member reports whether any channel clamped.
std::pair<RotorCommand, bool> augment(const RotorCommand& u_mpc, const Vec4& u_l1,
                                      const VehicleParams& params);

/// Per-step diagnostics surfaced for logging.
struct L1StepInfo {
  Vec4 u_l1 = Vec4::Zero();
  Vec4 sigma_m = Vec4::Zero();
  Vec2 sigma_um = Vec2::Zero();
  Vec6 z_tilde = Vec6::Zero();
  bool saturated = false;
  bool estimate_clipped = false;
  bool basis_singular = false;
  bool observer_reset = false;
};

/// Owns the observer state across control steps. One caller at a time;
/// independent instances may run concurrently.
class L1Augmentation {
 public:
  L1Augmentation(VehicleParams nominal, L1Config cfg);

  /// Full update for one control period: adapt, filter, augment, propagate.
  /// On a singular basis or diverged observer the previous command is held
  /// and the observer resets to the measurement.
  RotorCommand step(const VehicleState& measured, const RotorCommand& u_mpc, L1StepInfo* info);

  const L1State& state() const { return state_; }
  void reset(const VehicleState& measured);

 private:
  VehicleParams params_;
  L1Config cfg_;
  L1State state_;
  bool initialized_ = false;
};

}  // namespace quad
