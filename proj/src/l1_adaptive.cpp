#include "quad/l1_adaptive.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "quad/errors.hpp"
#include "quad/rigid_body.hpp"

namespace quad {

void L1Config::validate() const {
  if (!(As_diag.array() < 0.0).all()) {
    throw std::invalid_argument("l1: As_diag entries must be strictly negative");
  }
  if (!(cutoff.array() > 0.0).all()) {
    throw std::invalid_argument("l1: cutoff frequencies must be positive");
  }
  if (!(Ts > 0.0)) throw std::invalid_argument("l1: Ts must be positive");
  if ((sigma_clip.array() <= 0.0).any()) {
    throw std::invalid_argument("l1: sigma_clip entries must be positive");
  }
}

Vec6 measured_z(const VehicleState& state) {
  Vec6 z;
  z.head<3>() = state.velocity;
  z.tail<3>() = state.body_rates;
  return z;
}

UncertaintyBasis build_basis(const VehicleState& state, const RotorCommand& u_mpc,
                             const VehicleParams& params) {
  const Mat3 r = state.attitude.normalized().rotation_matrix();
  const Vec3 ex = r.col(0), ey = r.col(1), ez = r.col(2);
  const double m = params.mass;
  const Eigen::Matrix<double, 3, 4> p = params.allocation_matrix();
  const Vec3 j_inv = params.inertia_diag.cwiseInverse();

  UncertaintyBasis basis;
  for (int i = 0; i < 4; ++i) {
    basis.g_mat.block<3, 1>(0, i) = ez / m;
    basis.g_mat.block<3, 1>(3, i) = j_inv.cwiseProduct(p.col(i));
  }
  basis.g_perp.block<3, 1>(0, 0) = ex / m;
  basis.g_perp.block<3, 1>(0, 1) = ey / m;
  basis.g_perp.block<3, 2>(3, 0).setZero();

  const Vec3 grav(0.0, 0.0, -params.gravity);
  const Vec3& om = state.body_rates;
  const Vec3 tau = p * u_mpc.thrusts;
  basis.f_vec.head<3>() = grav + ez * (u_mpc.thrusts.sum() / m) -
                          params.drag_matrix_diag.cwiseProduct(state.velocity);
  basis.f_vec.tail<3>() =
      j_inv.cwiseProduct(tau) - j_inv.cwiseProduct(om.cross(params.inertia_diag.cwiseProduct(om)));
  return basis;
}

AdaptResult adapt(const Vec6& z_hat, const Vec6& z_measured, const UncertaintyBasis& basis,
                  const L1Config& cfg) {
  Eigen::Matrix<double, 6, 6> g;
  g << basis.g_mat, basis.g_perp;

  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(5) > 0.0) || sv(0) / sv(5) >= 1e8) {
    throw BasisSingularError("adapt: uncertainty basis is numerically singular");
  }

  const Vec6 z_tilde = z_hat - z_measured;
  // Diagonal A_s: Phi^{-1} exp(A_s Ts) reduces to a scalar gain per channel.
  Vec6 w;
  for (int i = 0; i < 6; ++i) {
    const double a = cfg.As_diag(i);
    const double ea = std::exp(a * cfg.Ts);
    w(i) = a * ea / (ea - 1.0) * z_tilde(i);
  }
  const Vec6 sigma = -svd.solve(w);

  AdaptResult res;
  res.sigma_m = sigma.head<4>();
  res.sigma_um = sigma.tail<2>();
  for (int i = 0; i < 4; ++i) {
    if (std::abs(res.sigma_m(i)) > cfg.sigma_clip(i)) {
      res.sigma_m(i) = std::copysign(cfg.sigma_clip(i), res.sigma_m(i));
      res.clipped = true;
    }
  }
  for (int i = 0; i < 2; ++i) {
    if (std::abs(res.sigma_um(i)) > cfg.sigma_clip(4 + i)) {
      res.sigma_um(i) = std::copysign(cfg.sigma_clip(4 + i), res.sigma_um(i));
      res.clipped = true;
    }
  }
  return res;
}

Vec4 filter_step(const Vec4& u_prev, const Vec4& sigma_m, const L1Config& cfg) {
  Vec4 u;
  for (int i = 0; i < 4; ++i) {
    const double decay = std::exp(-cfg.cutoff(i) * cfg.Ts);
    u(i) = u_prev(i) * decay - sigma_m(i) * (1.0 - decay);
  }
  return u;
}

Vec6 observer_step(const L1State& st, const UncertaintyBasis& basis, const Vec4& u_l1,
                   const Vec6& z_measured, const L1Config& cfg) {
  const Vec6 z_tilde = st.z_hat - z_measured;
  const Vec6 rate = basis.f_vec + basis.g_mat * (u_l1 + st.sigma_m) +
                    basis.g_perp * st.sigma_um + cfg.As_diag.cwiseProduct(z_tilde);
  const Vec6 z_next = st.z_hat + rate * cfg.Ts;
  if (!z_next.allFinite()) {
    throw ObserverDivergedError("observer_step: prediction diverged");
  }
  return z_next;
}

std::pair<RotorCommand, bool> augment(const RotorCommand& u_mpc, const Vec4& u_l1,
                                      const VehicleParams& params) {
  RotorCommand cmd;
  const Vec4 raw = u_mpc.thrusts + u_l1;
  cmd.thrusts = raw.cwiseMax(params.thrust_min).cwiseMin(params.thrust_max);
  const bool saturated = (cmd.thrusts.array() != raw.array()).any();
  return {cmd, saturated};
}

L1Augmentation::L1Augmentation(VehicleParams nominal, L1Config cfg)
    : params_(std::move(nominal)), cfg_(cfg) {
  params_.validate();
  cfg_.validate();
}

void L1Augmentation::reset(const VehicleState& measured) {
  state_ = L1State{};
  state_.z_hat = measured_z(measured);
  initialized_ = true;
}

RotorCommand L1Augmentation::step(const VehicleState& measured, const RotorCommand& u_mpc,
                                  L1StepInfo* info) {
  if (!initialized_) reset(measured);

  const Vec6 z = measured_z(measured);
  const UncertaintyBasis basis = build_basis(measured, u_mpc, params_);

  bool basis_singular = false;
  try {
    const AdaptResult res = adapt(state_.z_hat, z, basis, cfg_);
    state_.sigma_m = res.sigma_m;
    state_.sigma_um = res.sigma_um;
    if (info != nullptr) info->estimate_clipped = res.clipped;
  } catch (const BasisSingularError&) {
    basis_singular = true;  // hold previous estimates for this period
  }

  const Vec4 u_l1 = filter_step(state_.u_l1_prev, state_.sigma_m, cfg_);
  auto [cmd, saturated] = augment(u_mpc, u_l1, params_);

  bool observer_reset = false;
  L1State next = state_;
  next.u_l1_prev = u_l1;
  try {
    next.z_hat = observer_step(next, basis, u_l1, z, cfg_);
  } catch (const ObserverDivergedError&) {
    next.z_hat = z;
    observer_reset = true;
  }

  if (info != nullptr) {
    info->u_l1 = u_l1;
    info->sigma_m = state_.sigma_m;
    info->sigma_um = state_.sigma_um;
    info->z_tilde = state_.z_hat - z;
    info->saturated = saturated;
    info->basis_singular = basis_singular;
    info->observer_reset = observer_reset;
  }
  state_ = next;
  return cmd;
}

}  // namespace quad
