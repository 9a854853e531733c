#include "quad/rigid_body.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "quad/errors.hpp"

namespace quad {

Quaternion slerp(const Quaternion& a, const Quaternion& b, double t) {
  Quaternion bb = b;
  double d = dot(a, bb);
  if (d < 0.0) {
    bb = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  if (d > 1.0 - 1e-12) {
    // Nearly parallel: linear blend keeps full precision.
    Quaternion q{a.w + t * (bb.w - a.w), a.x + t * (bb.x - a.x), a.y + t * (bb.y - a.y),
                 a.z + t * (bb.z - a.z)};
    return q.normalized();
  }
  const double theta = std::acos(d);
  const double s = std::sin(theta);
  const double ca = std::sin((1.0 - t) * theta) / s;
  const double cb = std::sin(t * theta) / s;
  Quaternion q{ca * a.w + cb * bb.w, ca * a.x + cb * bb.x, ca * a.y + cb * bb.y,
               ca * a.z + cb * bb.z};
  return q.normalized();
}

void VehicleParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("params: mass must be positive");
  if (!(inertia_diag.array() > 0.0).all()) {
    throw std::invalid_argument("params: inertia entries must be positive");
  }
  if (!(thrust_min >= 0.0) || !(thrust_min < thrust_max)) {
    throw std::invalid_argument("params: need 0 <= thrust_min < thrust_max");
  }
  if ((drag_matrix_diag.array() < 0.0).any()) {
    throw std::invalid_argument("params: drag entries must be nonnegative");
  }
  if (!(gravity > 0.0)) throw std::invalid_argument("params: gravity magnitude must be positive");
  const Eigen::Matrix<double, 3, 4> p = allocation_matrix();
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(p);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 1e-9 * sv(0))) {
    throw std::invalid_argument("params: allocation matrix is rank deficient");
  }
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("quat_rotate: quaternion is not unit norm");
  }
  return q.rotate(v);
}

BodyWrench allocation(const RotorCommand& cmd, const VehicleParams& params) {
  BodyWrench w;
  w.collective = cmd.thrusts.sum();
  w.torque = params.allocation_matrix() * cmd.thrusts;
  return w;
}

StateDerivative dynamics(const VehicleState& state, const RotorCommand& cmd,
                         const VehicleParams& params, const Vec3& ext_force,
                         const Vec3& ext_torque) {
  const BodyWrench wrench = allocation(cmd, params);
  // Rotation uses a normalized copy so mid-integration attitudes with small
  // norm drift still map to a proper rotation; the raw components drive the
  // quaternion rate.
  const Quaternion qn = state.attitude.normalized();

  StateDerivative d;
  d.d_position = state.velocity;

  const Quaternion& q = state.attitude;
  const Vec3& om = state.body_rates;
  d.d_attitude(0) = 0.5 * (-q.x * om.x() - q.y * om.y() - q.z * om.z());
  d.d_attitude(1) = 0.5 * (q.w * om.x() + q.y * om.z() - q.z * om.y());
  d.d_attitude(2) = 0.5 * (q.w * om.y() - q.x * om.z() + q.z * om.x());
  d.d_attitude(3) = 0.5 * (q.w * om.z() + q.x * om.y() - q.y * om.x());

  const Vec3 thrust_world = qn.rotate(Vec3(0.0, 0.0, wrench.collective));
  const Vec3 grav(0.0, 0.0, -params.gravity);
  d.d_velocity = thrust_world / params.mass + grav -
                 params.drag_matrix_diag.cwiseProduct(state.velocity) + ext_force / params.mass;

  const Vec3 j_om = params.inertia_diag.cwiseProduct(om);
  d.d_body_rates =
      (wrench.torque + ext_torque - om.cross(j_om)).cwiseQuotient(params.inertia_diag);
  return d;
}

namespace {

VehicleState add_scaled(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState r;
  r.position = s.position + h * d.d_position;
  r.attitude = {s.attitude.w + h * d.d_attitude(0), s.attitude.x + h * d.d_attitude(1),
                s.attitude.y + h * d.d_attitude(2), s.attitude.z + h * d.d_attitude(3)};
  r.velocity = s.velocity + h * d.d_velocity;
  r.body_rates = s.body_rates + h * d.d_body_rates;
  return r;
}

}  // namespace

VehicleState rk4_step(const VehicleState& state, const RotorCommand& cmd,
                      const VehicleParams& params, double dt, const Vec3& ext_force,
                      const Vec3& ext_torque) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");

  const StateDerivative k1 = dynamics(state, cmd, params, ext_force, ext_torque);
  const StateDerivative k2 =
      dynamics(add_scaled(state, k1, 0.5 * dt), cmd, params, ext_force, ext_torque);
  const StateDerivative k3 =
      dynamics(add_scaled(state, k2, 0.5 * dt), cmd, params, ext_force, ext_torque);
  const StateDerivative k4 = dynamics(add_scaled(state, k3, dt), cmd, params, ext_force, ext_torque);

  VehicleState out;
  const double h6 = dt / 6.0;
  out.position =
      state.position + h6 * (k1.d_position + 2.0 * k2.d_position + 2.0 * k3.d_position + k4.d_position);
  const Vec4 dq = k1.d_attitude + 2.0 * k2.d_attitude + 2.0 * k3.d_attitude + k4.d_attitude;
  out.attitude = {state.attitude.w + h6 * dq(0), state.attitude.x + h6 * dq(1),
                  state.attitude.y + h6 * dq(2), state.attitude.z + h6 * dq(3)};
  out.velocity =
      state.velocity + h6 * (k1.d_velocity + 2.0 * k2.d_velocity + 2.0 * k3.d_velocity + k4.d_velocity);
  out.body_rates = state.body_rates + h6 * (k1.d_body_rates + 2.0 * k2.d_body_rates +
                                            2.0 * k3.d_body_rates + k4.d_body_rates);

  if (!out.finite()) throw IntegrationError("rk4_step: state diverged to non-finite values");
  out.attitude = out.attitude.normalized();
  return out;
}

}  // namespace quad
