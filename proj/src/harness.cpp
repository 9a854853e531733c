#include "quad/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "quad/errors.hpp"
#include "quad/rigid_body.hpp"

namespace quad {

namespace {

constexpr double kCrashPositionError = 50.0;  // m

void append_num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  out += buf;
}

void append_vec(std::string& out, const double* v, int n) {
  for (int i = 0; i < n; ++i) {
    out += ',';
    append_num(out, v[i]);
  }
}

}  // namespace

void FlightLog::write_csv(std::ostream& os) const { os << csv_string(); }

std::string FlightLog::csv_string() const {
  std::string out;
  out.reserve(rows.size() * 1200 + 512);
  out +=
      "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,"
      "ref_px,ref_py,ref_pz,ref_qw,ref_qx,ref_qy,ref_qz,ref_vx,ref_vy,ref_vz,"
      "ref_wx,ref_wy,ref_wz,"
      "cmd0,cmd1,cmd2,cmd3,mpc0,mpc1,mpc2,mpc3,ul1_0,ul1_1,ul1_2,ul1_3,"
      "sm0,sm1,sm2,sm3,sum0,sum1,zt0,zt1,zt2,zt3,zt4,zt5,saturated,solver_status\n";
  for (const LogRow& r : rows) {
    append_num(out, r.t);
    const Vec13 xs = pack_state(r.state);
    const Vec13 xr = pack_state(r.ref);
    append_vec(out, xs.data(), 13);
    append_vec(out, xr.data(), 13);
    append_vec(out, r.cmd.data(), 4);
    append_vec(out, r.mpc_raw.data(), 4);
    append_vec(out, r.u_l1.data(), 4);
    append_vec(out, r.sigma_m.data(), 4);
    append_vec(out, r.sigma_um.data(), 2);
    append_vec(out, r.z_tilde.data(), 6);
    out += r.saturated ? ",1" : ",0";
    out += r.solver_status == SolveOutcome::ok ? ",ok" : ",held";
    out += '\n';
  }
  if (status == RunStatus::crashed) {
    out += "# crash t=";
    append_num(out, crash_time);
    out += '\n';
  }
  return out;
}

void FlightLog::write_timing_csv(std::ostream& os) const {
  os << "t,solve_time\n";
  for (const LogRow& r : rows) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.9e,%.9e\n", r.t, r.solve_time);
    os << buf;
  }
}

NmpcController::NmpcController(const VehicleParams& nominal, const OcpConfig& cfg,
                               std::shared_ptr<const Sampler> sampler, double control_dt)
    : solver_(nominal, cfg), sampler_(std::move(sampler)), control_dt_(control_dt) {}

ReferenceWindow NmpcController::reference_window(double t) const {
  const int n = solver_.config().horizon_steps;
  const double dt = solver_.config().node_dt();
  ReferenceWindow w;
  w.states.reserve(n + 1);
  w.inputs.reserve(n);
  for (int k = 0; k <= n; ++k) {
    const ReferencePoint p = sampler_->sample(t + k * dt);
    w.states.push_back(p.state);
    if (k < n) w.inputs.push_back(p.feedforward);
  }
  return w;
}

RotorCommand NmpcController::step(double t, const VehicleState& measured, LogRow& row) {
  ReferenceWindow ref = reference_window(t);

  const OcpConfig& cfg = solver_.config();
  if (cfg.integrator_enabled) {
    const Vec3 pos_error = measured.position - ref.states.front().position;
    int_state_ = integrator_update(int_state_, pos_error, control_dt_, cfg);
    const Vec3 offset = cfg.integrator_weight.cwiseProduct(int_state_);
    for (VehicleState& s : ref.states) s.position -= offset;
  }

  try {
    const Solution sol = solver_.solve(measured, ref, warm_ ? &*warm_ : nullptr);
    warm_ = SqpSolver::shift_warm_start(sol);
    last_cmd_ = sol.inputs.front();
    have_last_cmd_ = true;
    row.solver_status = SolveOutcome::ok;
  } catch (const SolverError&) {
    row.solver_status = SolveOutcome::held_previous;
    if (!have_last_cmd_) {
      last_cmd_.thrusts = ref.inputs.front().thrusts;
      have_last_cmd_ = true;
    }
    warm_.reset();
  }
  row.mpc_raw = last_cmd_.thrusts;
  return last_cmd_;
}

L1NmpcController::L1NmpcController(const VehicleParams& nominal, const OcpConfig& ocp,
                                   const L1Config& l1, std::shared_ptr<const Sampler> sampler,
                                   double control_dt)
    : base_(nominal, ocp, std::move(sampler), control_dt), l1_(nominal, l1), period_(l1.Ts) {}

RotorCommand L1NmpcController::step(double t, const VehicleState& measured, LogRow& row) {
  u_mpc_held_ = base_.step(t, measured, row);
  L1StepInfo info;
  const RotorCommand cmd = l1_.step(measured, u_mpc_held_, &info);
  row.u_l1 = info.u_l1;
  row.sigma_m = info.sigma_m;
  row.sigma_um = info.sigma_um;
  row.z_tilde = info.z_tilde;
  row.saturated = info.saturated;
  return cmd;
}

RotorCommand L1NmpcController::inner_update(double t, const VehicleState& measured) {
  (void)t;
  return l1_.step(measured, u_mpc_held_, nullptr);
}

std::shared_ptr<const Sampler> make_sampler(const ScenarioConfig& cfg) {
  const double hover = cfg.nominal_params.hover_thrust_total();
  switch (cfg.trajectory_type) {
    case TrajectoryType::hover:
      return std::make_shared<HoverSampler>(cfg.hover_point, hover, cfg.hover_duration);
    case TrajectoryType::circle:
      return std::make_shared<CircleSampler>(cfg.circle, hover);
    case TrajectoryType::track:
      return std::make_shared<TrackSampler>(load_track(cfg.track_file, hover));
  }
  throw std::invalid_argument("unknown trajectory type");
}

std::unique_ptr<FlightController> make_controller(const ScenarioConfig& cfg,
                                                  std::shared_ptr<const Sampler> sampler) {
  OcpConfig ocp = cfg.ocp;
  ocp.integrator_enabled = cfg.controller == ControllerType::nmpc_i;
  switch (cfg.controller) {
    case ControllerType::nmpc:
    case ControllerType::nmpc_i:
      return std::make_unique<NmpcController>(cfg.nominal_params, ocp, std::move(sampler),
                                              cfg.control_dt);
    case ControllerType::l1_nmpc:
      return std::make_unique<L1NmpcController>(cfg.nominal_params, ocp, cfg.l1,
                                                std::move(sampler), cfg.control_dt);
  }
  throw std::invalid_argument("unknown controller type");
}

namespace {

VehicleState apply_noise(const VehicleState& s, const NoiseConfig& noise, std::mt19937_64& rng) {
  if (!noise.any()) return s;
  std::normal_distribution<double> gauss(0.0, 1.0);
  VehicleState out = s;
  for (int i = 0; i < 3; ++i) out.position(i) += noise.pos_std * gauss(rng);
  for (int i = 0; i < 3; ++i) out.velocity(i) += noise.vel_std * gauss(rng);
  for (int i = 0; i < 3; ++i) out.body_rates(i) += noise.rate_std * gauss(rng);
  if (noise.att_std > 0.0) {
    const Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
    const double angle = noise.att_std * gauss(rng);
    if (axis.norm() > 0.0) {
      out.attitude = (Quaternion::from_axis_angle(axis, angle) * s.attitude).normalized();
    }
  }
  return out;
}

}  // namespace

FlightLog run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const VehicleParams plant = apply_mismatch(cfg.nominal_params, cfg.mismatch);
  const std::shared_ptr<const Sampler> sampler = make_sampler(cfg);
  const std::unique_ptr<FlightController> controller = make_controller(cfg, sampler);

  std::mt19937_64 rng(cfg.seed);
  const int substeps = cfg.substeps_per_control();
  const double duration = sampler->duration();
  const int total_steps = static_cast<int>(std::floor(duration / cfg.control_dt + 1e-9));

  FlightLog log;
  log.control_dt = cfg.control_dt;
  log.rows.reserve(total_steps + 1);

  VehicleState truth = sampler->sample(0.0).state;
  RotorCommand cmd;

  for (int k = 0; k <= total_steps; ++k) {
    const double t = k * cfg.control_dt;
    const ReferencePoint ref = sampler->sample(t);

    LogRow row;
    row.t = t;
    row.state = truth;
    row.ref = ref.state;

    if ((truth.position - ref.state.position).norm() > kCrashPositionError) {
      log.status = RunStatus::crashed;
      log.crash_time = t;
      log.rows.push_back(row);
      break;
    }

    const VehicleState measured = apply_noise(truth, cfg.noise, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const RotorCommand mpc_like = controller->step(t, measured, row);
    const auto t1 = std::chrono::steady_clock::now();
    row.solve_time = std::chrono::duration<double>(t1 - t0).count();

    // The applied command is always confined to the actuator box.
    cmd.thrusts =
        mpc_like.thrusts.cwiseMax(cfg.nominal_params.thrust_min).cwiseMin(cfg.nominal_params.thrust_max);
    row.cmd = cmd.thrusts;
    log.rows.push_back(row);

    if (k == total_steps) break;
    const double inner = controller->inner_period();
    const int inner_every =
        inner > 0.0 ? std::max(1, static_cast<int>(std::llround(inner / cfg.sim_dt))) : 0;
    for (int s = 0; s < substeps; ++s) {
      const double ts = t + s * cfg.sim_dt;
      if (inner_every > 0 && s > 0 && s % inner_every == 0) {
        const VehicleState inner_meas = apply_noise(truth, cfg.noise, rng);
        const auto i0 = std::chrono::steady_clock::now();
        const RotorCommand refreshed = controller->inner_update(ts, inner_meas);
        const auto i1 = std::chrono::steady_clock::now();
        log.rows.back().solve_time += std::chrono::duration<double>(i1 - i0).count();
        cmd.thrusts = refreshed.thrusts.cwiseMax(cfg.nominal_params.thrust_min)
                          .cwiseMin(cfg.nominal_params.thrust_max);
      }
      const Vec3 wind = external_force(ts, truth, cfg.wind);
      try {
        truth = rk4_step(truth, cmd, plant, cfg.sim_dt, wind);
      } catch (const IntegrationError&) {
        log.status = RunStatus::crashed;
        log.crash_time = ts;
        return log;
      }
    }
  }
  return log;
}

Metrics compute_metrics(const FlightLog& log) {
  if (log.rows.empty()) throw std::invalid_argument("compute_metrics: empty log");
  Metrics m;
  m.status = log.status;
  double sum_sq = 0.0;
  double sat = 0.0;
  for (const LogRow& r : log.rows) {
    const double e = (r.state.position - r.ref.position).norm();
    sum_sq += e * e;
    m.max_position_error = std::max(m.max_position_error, e);
    sat += r.saturated ? 1.0 : 0.0;
    m.mean_solve_time += r.solve_time;
    m.max_solve_time = std::max(m.max_solve_time, r.solve_time);
  }
  const double n = static_cast<double>(log.rows.size());
  m.position_rmse = std::sqrt(sum_sq / n);
  m.saturation_fraction = sat / n;
  m.mean_solve_time /= n;

  const size_t tail_start = log.rows.size() - std::max<size_t>(1, log.rows.size() / 5);
  double z_err = 0.0;
  for (size_t i = tail_start; i < log.rows.size(); ++i) {
    z_err += log.rows[i].state.position.z() - log.rows[i].ref.position.z();
  }
  m.steady_state_z_error = std::abs(z_err / static_cast<double>(log.rows.size() - tail_start));
  return m;
}

double reduction_percent(double baseline_rmse, double candidate_rmse) {
  return 100.0 * (1.0 - candidate_rmse / baseline_rmse);
}

SweepTable sweep(const ScenarioConfig& tmpl, const std::vector<double>& v_peaks,
                 const std::vector<ControllerType>& controllers) {
  SweepTable table;
  for (double v : v_peaks) {
    std::vector<SweepEntry> at_speed;
    for (ControllerType ctrl : controllers) {
      ScenarioConfig cfg = tmpl;
      cfg.trajectory_type = TrajectoryType::circle;
      cfg.circle.v_peak = v;
      cfg.controller = ctrl;
      SweepEntry entry;
      entry.v_peak = v;
      entry.controller = ctrl;
      try {
        const FlightLog log = run_scenario(cfg);
        if (log.status == RunStatus::completed) {
          entry.metrics = compute_metrics(log);
        } else {
          entry.metrics.status = RunStatus::crashed;
        }
      } catch (const std::exception&) {
        entry.metrics.status = RunStatus::crashed;
      }
      at_speed.push_back(entry);
    }
    const auto base = std::find_if(at_speed.begin(), at_speed.end(), [](const SweepEntry& e) {
      return e.controller == ControllerType::nmpc;
    });
    for (SweepEntry& e : at_speed) {
      if (base != at_speed.end() && base->metrics.status == RunStatus::completed &&
          e.metrics.status == RunStatus::completed && e.controller != ControllerType::nmpc) {
        e.reduction_pct = reduction_percent(base->metrics.position_rmse, e.metrics.position_rmse);
      }
      table.entries.push_back(e);
    }
  }
  return table;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& os, const std::string& run_name, const Metrics& m) {
  os << "run,status,position_rmse,steady_state_z_error,max_position_error,"
        "saturation_fraction,mean_solve_time,max_solve_time\n";
  os << run_name << ',' << (m.status == RunStatus::completed ? "completed" : "crash") << ','
     << fmt(m.position_rmse) << ',' << fmt(m.steady_state_z_error) << ','
     << fmt(m.max_position_error) << ',' << fmt(m.saturation_fraction) << ','
     << fmt(m.mean_solve_time) << ',' << fmt(m.max_solve_time) << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  os << "v_peak,controller,status,position_rmse,steady_state_z_error,"
        "max_position_error,saturation_fraction,reduction_pct\n";
  for (const SweepEntry& e : table.entries) {
    os << fmt(e.v_peak) << ',' << to_string(e.controller) << ','
       << (e.metrics.status == RunStatus::completed ? "completed" : "crash") << ',';
    if (e.metrics.status == RunStatus::completed) {
      os << fmt(e.metrics.position_rmse) << ',' << fmt(e.metrics.steady_state_z_error) << ','
         << fmt(e.metrics.max_position_error) << ',' << fmt(e.metrics.saturation_fraction) << ',';
    } else {
      os << "crash,crash,crash,crash,";
    }
    if (e.reduction_pct) {
      os << fmt(*e.reduction_pct);
    } else {
      os << "?";
    }
    os << '\n';
  }
}

}  // namespace quad
