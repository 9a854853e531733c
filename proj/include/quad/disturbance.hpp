#pragma once

#include <cstdint>

#include "quad/types.hpp"

namespace quad {

/// Parameter offsets applied to the simulated plant while controllers keep
/// the nominal model.
struct ParamMismatch {
  double mass_delta = 0.0;              // kg
  Vec3 inertia_scale = Vec3::Ones();    // per axis
  Vec4 arm_scale = Vec4::Ones();        // per rotor, scales both arm distances
  Vec3 drag_scale = Vec3::Ones();       // per axis

  bool is_identity() const {
    return mass_delta == 0.0 && inertia_scale == Vec3::Ones() && arm_scale == Vec4::Ones() &&
           drag_scale == Vec3::Ones();
  }
};

enum class WindMode { none, constant, fan_zone };

struct WindField {
  WindMode mode = WindMode::none;
  Vec3 force = Vec3::Zero();        // N, constant mode
  Vec3 zone_center = Vec3::Zero();  // m, fan_zone mode
  double zone_radius = 1.0;         // m
  Vec3 zone_force = Vec3::Zero();   // N
  std::uint64_t seed = 0;           // reserved for stochastic extensions

  void validate() const;
};

/// Plant parameters with the mismatch applied. The nominal object is left
/// untouched. Throws std::invalid_argument when the result is unphysical.
VehicleParams apply_mismatch(const VehicleParams& nominal, const ParamMismatch& m);

/// World-frame disturbance force at time t for the given state.
Vec3 external_force(double t, const VehicleState& state, const WindField& w);

}  // namespace quad
