#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace quad {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec13 = Eigen::Matrix<double, 13, 1>;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion (w, x, y, z). normalized() canonicalizes the sign so that
/// w >= 0; q and -q describe the same rotation.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quaternion normalized() const {
    const double n = norm();
    if (!std::isfinite(n) || n <= 0.0) {
      throw std::invalid_argument("quaternion: cannot normalize zero or non-finite quaternion");
    }
    const double s = (w < 0.0 ? -1.0 : 1.0) / n;
    return {w * s, x * s, y * s, z * s};
  }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  Quaternion operator*(const Quaternion& r) const {
    return {w * r.w - x * r.x - y * r.y - z * r.z,
            w * r.x + x * r.w + y * r.z - z * r.y,
            w * r.y - x * r.z + y * r.w + z * r.x,
            w * r.z + x * r.y - y * r.x + z * r.w};
  }

  /// Rotates v by this quaternion. No unit-norm check; see quat_rotate for
  /// the checked entry point.
  Vec3 rotate(const Vec3& v) const {
    const Vec3 qv(x, y, z);
    const Vec3 t = 2.0 * qv.cross(v);
    return v + w * t + qv.cross(t);
  }

  Mat3 rotation_matrix() const {
    Mat3 r;
    const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
    r(0, 0) = ww + xx - yy - zz;
    r(0, 1) = 2.0 * (x * y - w * z);
    r(0, 2) = 2.0 * (x * z + w * y);
    r(1, 0) = 2.0 * (x * y + w * z);
    r(1, 1) = ww - xx + yy - zz;
    r(1, 2) = 2.0 * (y * z - w * x);
    r(2, 0) = 2.0 * (x * z - w * y);
    r(2, 1) = 2.0 * (y * z + w * x);
    r(2, 2) = ww - xx - yy + zz;
    return r;
  }

  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  static Quaternion from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n <= 0.0) throw std::invalid_argument("quaternion: zero rotation axis");
    const double h = 0.5 * angle;
    const double s = std::sin(h) / n;
    return {std::cos(h), axis.x() * s, axis.y() * s, axis.z() * s};
  }

  static Quaternion from_yaw(double yaw) {
    return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
  }
};

inline double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Spherical linear interpolation with shortest-path sign alignment.
Quaternion slerp(const Quaternion& a, const Quaternion& b, double t);

/// 13-dimensional rigid-body state: world position, attitude, world velocity,
/// body rates.
struct VehicleState {
  Vec3 position = Vec3::Zero();
  Quaternion attitude;
  Vec3 velocity = Vec3::Zero();
  Vec3 body_rates = Vec3::Zero();

  bool finite() const {
    return position.allFinite() && attitude.finite() && velocity.allFinite() &&
           body_rates.allFinite();
  }
};

/// Individual rotor thrusts in newtons, indexed by the fixed rotor layout.
struct RotorCommand {
  Vec4 thrusts = Vec4::Zero();

  double collective() const { return thrusts.sum(); }
};

/// Physical vehicle parameters. Rotor geometry is stored per rotor as the
/// distances to the body x/y axes so per-rotor scaling stays expressible.
struct VehicleParams {
  double mass = 0.0;                     // kg
  Vec3 inertia_diag = Vec3::Zero();      // kg m^2
  Vec4 arm_x = Vec4::Zero();             // m, distance of rotor i to body x axis
  Vec4 arm_y = Vec4::Zero();             // m, distance of rotor i to body y axis
  double drag_torque_coeff = 0.0;        // m
  Vec3 drag_matrix_diag = Vec3::Zero();  // 1/s, linear drag on world velocity
  double gravity = 9.81;                 // m/s^2, magnitude
  double thrust_min = 0.0;               // N per rotor
  double thrust_max = 0.0;               // N per rotor

  /// Torque rows of the thrust map. Column i gives the body torque produced
  /// by one newton on rotor i; signs follow the fixed rotor numbering
  /// (rotors 0,1 on the -y side, rotors 1,2 on the +x side, alternating
  /// spin directions).
  Eigen::Matrix<double, 3, 4> allocation_matrix() const {
    Eigen::Matrix<double, 3, 4> p;
    p.row(0) << -arm_x(0), -arm_x(1), arm_x(2), arm_x(3);
    p.row(1) << arm_y(0), -arm_y(1), -arm_y(2), arm_y(3);
    p.row(2) << -drag_torque_coeff, drag_torque_coeff, -drag_torque_coeff, drag_torque_coeff;
    return p;
  }

  double hover_thrust_total() const { return mass * gravity; }

  /// Throws std::invalid_argument when any physical invariant is violated.
  void validate() const;
};

struct StateDerivative {
  Vec3 d_position = Vec3::Zero();
  Vec4 d_attitude = Vec4::Zero();  // quaternion rate, (w, x, y, z) order
  Vec3 d_velocity = Vec3::Zero();
  Vec3 d_body_rates = Vec3::Zero();
};

}  // namespace quad
