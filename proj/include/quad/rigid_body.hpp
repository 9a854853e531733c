#pragma once

#include "quad/types.hpp"

namespace quad {

/// Rotates v by q. Throws std::invalid_argument when |norm(q) - 1| > 1e-6.
Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

struct BodyWrench {
  double collective = 0.0;  // N
  Vec3 torque = Vec3::Zero();  // N m
};

/// Collective thrust and body torque produced by the four rotor thrusts.
BodyWrench allocation(const RotorCommand& cmd, const VehicleParams& params);

/// Continuous-time state derivative. ext_force (world frame, N) and
/// ext_torque (body frame, N m) carry disturbances; pass zeros in nominal use.
StateDerivative dynamics(const VehicleState& state, const RotorCommand& cmd,
                         const VehicleParams& params, const Vec3& ext_force = Vec3::Zero(),
                         const Vec3& ext_torque = Vec3::Zero());

/// One classic fourth-order Runge-Kutta step with the command held constant.
/// The attitude is renormalized after the step. Throws IntegrationError when
/// the result is non-finite.
VehicleState rk4_step(const VehicleState& state, const RotorCommand& cmd,
                      const VehicleParams& params, double dt, const Vec3& ext_force = Vec3::Zero(),
                      const Vec3& ext_torque = Vec3::Zero());

}  // namespace quad
