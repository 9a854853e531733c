#include "quad/nmpc.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "quad/errors.hpp"
#include "quad/rigid_body.hpp"

namespace quad {

void OcpConfig::validate() const {
  if (horizon_steps < 2) throw std::invalid_argument("ocp: horizon_steps must be >= 2");
  if (!(horizon_time > 0.0)) throw std::invalid_argument("ocp: horizon_time must be positive");
  if ((state_weights.array() < 0.0).any() || (input_weights.array() < 0.0).any()) {
    throw std::invalid_argument("ocp: weights must be nonnegative");
  }
  if (!(state_weights.array() > 0.0).any()) {
    throw std::invalid_argument("ocp: at least one state weight must be positive");
  }
  if (sqp_iters_per_step < 1) throw std::invalid_argument("ocp: sqp_iters_per_step must be >= 1");
  if (!(qp_tolerance > 0.0)) throw std::invalid_argument("ocp: qp_tolerance must be positive");
  if (integrator_enabled && !(integrator_leak >= 0.0)) {
    throw std::invalid_argument("ocp: integrator_leak must be nonnegative");
  }
}

Vec13 pack_state(const VehicleState& x) {
  Vec13 v;
  v.segment<3>(0) = x.position;
  v(3) = x.attitude.w;
  v(4) = x.attitude.x;
  v(5) = x.attitude.y;
  v(6) = x.attitude.z;
  v.segment<3>(7) = x.velocity;
  v.segment<3>(10) = x.body_rates;
  return v;
}

VehicleState unpack_state(const Vec13& v) {
  VehicleState x;
  x.position = v.segment<3>(0);
  x.attitude = {v(3), v(4), v(5), v(6)};
  x.velocity = v.segment<3>(7);
  x.body_rates = v.segment<3>(10);
  return x;
}

Vec13 state_error(const VehicleState& x, const VehicleState& ref) {
  Vec13 e = pack_state(x);
  Vec13 r = pack_state(ref);
  const Quaternion rq = ref.attitude;
  if (dot(x.attitude, rq) < 0.0) r.segment<4>(3) = -r.segment<4>(3);
  return e - r;
}

void linearize(const VehicleState& x, const RotorCommand& u, const VehicleParams& params,
               double dt, Eigen::Matrix<double, 13, 13>& a, Eigen::Matrix<double, 13, 4>& b) {
  const Vec13 x0 = pack_state(x);
  const Vec13 f0 = pack_state(rk4_step(x, u, params, dt));

  for (int i = 0; i < 13; ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x0(i)));
    Vec13 xp = x0;
    xp(i) += h;
    const Vec13 fp = pack_state(rk4_step(unpack_state(xp), u, params, dt));
    a.col(i) = (fp - f0) / h;
  }
  for (int i = 0; i < 4; ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(u.thrusts(i)));
    RotorCommand up = u;
    up.thrusts(i) += h;
    b.col(i) = (pack_state(rk4_step(x, up, params, dt)) - f0) / h;
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw SolverError("linearize: non-finite Jacobian entries");
  }
}

BoxQpResult solve_box_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& u0, double tol, int max_iter) {
  const int n = static_cast<int>(g.size());
  BoxQpResult res;
  res.x = u0.cwiseMax(lo).cwiseMin(hi);

  // -1 at lower bound, +1 at upper bound, 0 free.
  Eigen::VectorXi ws = Eigen::VectorXi::Zero(n);

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    std::vector<int> free_idx;
    free_idx.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (ws(i) == 0) free_idx.push_back(i);
    }
    const int nf = static_cast<int>(free_idx.size());

    Eigen::VectorXd grad = h * res.x + g;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (nf > 0) {
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int r = 0; r < nf; ++r) {
        gf(r) = grad(free_idx[r]);
        for (int c = 0; c < nf; ++c) hff(r, c) = h(free_idx[r], free_idx[c]);
      }
      const Eigen::VectorXd df = hff.ldlt().solve(-gf);
      for (int r = 0; r < nf; ++r) d(free_idx[r]) = df(r);
    }

    if (d.lpNorm<Eigen::Infinity>() <= tol) {
      // Stationary on the free set; check multiplier signs on the bounds.
      int worst = -1;
      double worst_viol = tol;
      for (int i = 0; i < n; ++i) {
        if (ws(i) == -1 && grad(i) < -worst_viol) {
          worst_viol = -grad(i);
          worst = i;
        } else if (ws(i) == 1 && grad(i) > worst_viol) {
          worst_viol = grad(i);
          worst = i;
        }
      }
      if (worst < 0) {
        res.status = QpStatus::optimal;
        return res;
      }
      ws(worst) = 0;
      continue;
    }

    // Ratio test along d to the nearest bound.
    double alpha = 1.0;
    int blocking = -1;
    int blocking_side = 0;
    for (int i : free_idx) {
      if (d(i) > 0.0) {
        const double step = (hi(i) - res.x(i)) / d(i);
        if (step < alpha) {
          alpha = step;
          blocking = i;
          blocking_side = 1;
        }
      } else if (d(i) < 0.0) {
        const double step = (lo(i) - res.x(i)) / d(i);
        if (step < alpha) {
          alpha = step;
          blocking = i;
          blocking_side = -1;
        }
      }
    }
    res.x += alpha * d;
    if (blocking >= 0) {
      ws(blocking) = blocking_side;
      res.x(blocking) = blocking_side > 0 ? hi(blocking) : lo(blocking);
    }
    res.x = res.x.cwiseMax(lo).cwiseMin(hi);
  }
  res.status = QpStatus::max_iter;
  return res;
}

Vec3 integrator_update(const Vec3& int_state, const Vec3& pos_error, double dt,
                       const OcpConfig& cfg) {
  return int_state + pos_error * dt - cfg.integrator_leak * int_state * dt;
}

SqpSolver::SqpSolver(VehicleParams nominal, OcpConfig cfg)
    : params_(std::move(nominal)), cfg_(cfg) {
  params_.validate();
  cfg_.validate();
}

std::vector<VehicleState> SqpSolver::rollout(const VehicleState& x0,
                                             const std::vector<RotorCommand>& inputs) const {
  std::vector<VehicleState> x(inputs.size() + 1);
  x[0] = x0;
  try {
    for (size_t k = 0; k < inputs.size(); ++k) {
      x[k + 1] = rk4_step(x[k], inputs[k], params_, cfg_.node_dt());
    }
  } catch (const IntegrationError& e) {
    throw SolverError(std::string("rollout diverged: ") + e.what());
  }
  return x;
}

double SqpSolver::rollout_cost(const VehicleState& x0, const ReferenceWindow& ref,
                               const std::vector<RotorCommand>& inputs) const {
  const std::vector<VehicleState> x = rollout(x0, inputs);
  const int n = cfg_.horizon_steps;
  double cost = 0.0;
  for (int k = 0; k <= n; ++k) {
    const Vec13 e = state_error(x[k], ref.states[k]);
    cost += e.dot(cfg_.state_weights.cwiseProduct(e));
  }
  for (int k = 0; k < n; ++k) {
    const Vec4 d = inputs[k].thrusts - ref.inputs[k].thrusts;
    cost += d.dot(cfg_.input_weights.cwiseProduct(d));
  }
  return cost;
}

Solution SqpSolver::shift_warm_start(const Solution& prev) {
  Solution s = prev;
  if (!s.inputs.empty()) {
    for (size_t k = 0; k + 1 < s.inputs.size(); ++k) s.inputs[k] = prev.inputs[k + 1];
    s.inputs.back() = prev.inputs.back();
  }
  if (s.states.size() > 1) {
    for (size_t k = 0; k + 1 < s.states.size(); ++k) s.states[k] = prev.states[k + 1];
    s.states.back() = prev.states.back();
  }
  return s;
}

Solution SqpSolver::solve(const VehicleState& x0, const ReferenceWindow& ref,
                          const Solution* warm) const {
  const int n = cfg_.horizon_steps;
  const double dt = cfg_.node_dt();
  if (static_cast<int>(ref.states.size()) != n + 1 || static_cast<int>(ref.inputs.size()) != n) {
    throw std::invalid_argument("solve: reference window does not match the horizon");
  }
  if (!x0.finite()) throw SolverError("solve: non-finite initial state");

  std::vector<RotorCommand> u =
      (warm != nullptr && static_cast<int>(warm->inputs.size()) == n) ? warm->inputs : ref.inputs;
  for (auto& uk : u) {
    uk.thrusts = uk.thrusts.cwiseMax(params_.thrust_min).cwiseMin(params_.thrust_max);
  }

  const int nu = 4 * n;
  Eigen::MatrixXd hmat(nu, nu);
  Eigen::VectorXd gvec(nu), lo(nu), hi(nu);
  Eigen::Matrix<double, 13, 13> a;
  Eigen::Matrix<double, 13, 4> b;
  Eigen::MatrixXd sens(13, nu);

  double cost_prev = rollout_cost(x0, ref, u);
  QpStatus status = QpStatus::optimal;
  double kkt = 0.0;

  for (int iter = 0; iter < cfg_.sqp_iters_per_step; ++iter) {
    const std::vector<VehicleState> x = rollout(x0, u);

    hmat.setZero();
    gvec.setZero();
    sens.setZero();
    const auto q = cfg_.state_weights.asDiagonal();
    for (int k = 0; k < n; ++k) {
      linearize(x[k], u[k], params_, dt, a, b);
      const int na = 4 * (k + 1);
      sens.leftCols(na) = a * sens.leftCols(na);
      sens.block<13, 4>(0, 4 * k) = b;

      const auto sa = sens.leftCols(na);
      const Vec13 e = state_error(x[k + 1], ref.states[k + 1]);
      hmat.topLeftCorner(na, na).noalias() += sa.transpose() * (q * sa);
      gvec.head(na).noalias() += sa.transpose() * (q * e);
    }
    for (int k = 0; k < n; ++k) {
      const Vec4 d = u[k].thrusts - ref.inputs[k].thrusts;
      hmat.block<4, 4>(4 * k, 4 * k) += cfg_.input_weights.asDiagonal();
      gvec.segment<4>(4 * k) += cfg_.input_weights.cwiseProduct(d);
      lo.segment<4>(4 * k) = Vec4::Constant(params_.thrust_min) - u[k].thrusts;
      hi.segment<4>(4 * k) = Vec4::Constant(params_.thrust_max) - u[k].thrusts;
    }
    // Keeps the reduced Hessian factorizable when input weights are zero.
    hmat.diagonal().array() += 1e-12 * (1.0 + hmat.trace() / nu);

    const BoxQpResult qp =
        solve_box_qp(hmat, gvec, lo, hi, Eigen::VectorXd::Zero(nu), cfg_.qp_tolerance);
    status = qp.status;

    // Projected-gradient residual of the condensed QP at the returned point.
    {
      const Eigen::VectorXd grad = hmat * qp.x + gvec;
      kkt = 0.0;
      for (int i = 0; i < nu; ++i) {
        double r = std::abs(grad(i));
        if (qp.x(i) <= lo(i) + 1e-14) r = std::max(0.0, -grad(i));
        if (qp.x(i) >= hi(i) - 1e-14) r = std::max(0.0, grad(i));
        kkt = std::max(kkt, r);
      }
    }

    // Full Gauss-Newton step, halved while it would increase the nonlinear
    // cost (the step is a descent direction, so this terminates).
    double scale = 1.0;
    bool accepted = false;
    std::vector<RotorCommand> u_try = u;
    for (int bt = 0; bt < 8; ++bt) {
      for (int k = 0; k < n; ++k) {
        u_try[k].thrusts = (u[k].thrusts + scale * qp.x.segment<4>(4 * k))
                               .cwiseMax(params_.thrust_min)
                               .cwiseMin(params_.thrust_max);
      }
      const double cost_try = rollout_cost(x0, ref, u_try);
      if (cost_try <= cost_prev + 1e-12) {
        u = u_try;
        cost_prev = cost_try;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // already at a stationary point for this linearization
  }

  Solution sol;
  sol.inputs = u;
  sol.states = rollout(x0, u);
  sol.kkt_residual = kkt;
  sol.qp_status = status;
  return sol;
}

}  // namespace quad
