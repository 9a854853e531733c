#include "quad/disturbance.hpp"

#include <stdexcept>

namespace quad {

void WindField::validate() const {
  if (mode == WindMode::fan_zone && !(zone_radius > 0.0)) {
    throw std::invalid_argument("wind: fan zone radius must be positive");
  }
}

VehicleParams apply_mismatch(const VehicleParams& nominal, const ParamMismatch& m) {
  VehicleParams plant = nominal;
  plant.mass += m.mass_delta;
  plant.inertia_diag = nominal.inertia_diag.cwiseProduct(m.inertia_scale);
  plant.arm_x = nominal.arm_x.cwiseProduct(m.arm_scale);
  plant.arm_y = nominal.arm_y.cwiseProduct(m.arm_scale);
  plant.drag_matrix_diag = nominal.drag_matrix_diag.cwiseProduct(m.drag_scale);
  try {
    plant.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("invalid mismatch: ") + e.what());
  }
  return plant;
}

Vec3 external_force(double t, const VehicleState& state, const WindField& w) {
  (void)t;
  switch (w.mode) {
    case WindMode::none:
      return Vec3::Zero();
    case WindMode::constant:
      return w.force;
    case WindMode::fan_zone:
      return (state.position - w.zone_center).norm() < w.zone_radius ? w.zone_force : Vec3::Zero();
  }
  return Vec3::Zero();
}

}  // namespace quad
