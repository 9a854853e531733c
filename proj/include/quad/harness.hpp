#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "quad/config.hpp"
#include "quad/l1_adaptive.hpp"
#include "quad/nmpc.hpp"
#include "quad/trajectory.hpp"

namespace quad {

enum class RunStatus { completed, crashed };

enum class SolveOutcome { ok, held_previous };

struct LogRow {
  double t = 0.0;
  VehicleState state;
  VehicleState ref;
  Vec4 cmd = Vec4::Zero();       // thrusts applied to the plant
  Vec4 mpc_raw = Vec4::Zero();   // baseline solver output before augmentation
  Vec4 u_l1 = Vec4::Zero();
  Vec4 sigma_m = Vec4::Zero();
  Vec2 sigma_um = Vec2::Zero();
  Vec6 z_tilde = Vec6::Zero();
  bool saturated = false;
  SolveOutcome solver_status = SolveOutcome::ok;
  double solve_time = 0.0;  // s, wall clock for the whole controller update
};

struct FlightLog {
  std::vector<LogRow> rows;
  RunStatus status = RunStatus::completed;
  double crash_time = 0.0;
  double control_dt = 0.0;

  /// Deterministic serialization: everything except wall-clock timing.
  void write_csv(std::ostream& os) const;
  /// Wall-clock per-step timing sidecar (not reproducible across runs).
  void write_timing_csv(std::ostream& os) const;
  std::string csv_string() const;
};

struct Metrics {
  double position_rmse = 0.0;
  double steady_state_z_error = 0.0;  // |mean z error| over the final 20%
  double max_position_error = 0.0;
  double saturation_fraction = 0.0;
  double mean_solve_time = 0.0;
  double max_solve_time = 0.0;
  RunStatus status = RunStatus::completed;
};

/// Per-step control interface. Implementations see only the nominal model;
/// plant parameters never reach them.
class FlightController {
 public:
  virtual ~FlightController() = default;
  virtual RotorCommand step(double t, const VehicleState& measured, LogRow& row) = 0;

  /// Inner-loop refresh between control steps (0 = none). Controllers with a
  /// fast inner cascade update the applied command from a fresh measurement
  /// while the baseline command stays held.
  virtual double inner_period() const { return 0.0; }
  virtual RotorCommand inner_update(double t, const VehicleState& measured) {
    (void)t;
    (void)measured;
    return RotorCommand{};
  }
};

/// Baseline receding-horizon controller with warm-start shifting and the
/// optional position-error integrator.
class NmpcController : public FlightController {
 public:
  NmpcController(const VehicleParams& nominal, const OcpConfig& cfg,
                 std::shared_ptr<const Sampler> sampler, double control_dt);
  RotorCommand step(double t, const VehicleState& measured, LogRow& row) override;

  ReferenceWindow reference_window(double t) const;
  const Vec3& integrator_state() const { return int_state_; }

 private:
  SqpSolver solver_;
  std::shared_ptr<const Sampler> sampler_;
  double control_dt_;
  std::optional<Solution> warm_;
  Vec3 int_state_ = Vec3::Zero();
  RotorCommand last_cmd_;
  bool have_last_cmd_ = false;
};

/// Baseline controller plus the adaptive inner loop at the rotor level.
class L1NmpcController : public FlightController {
 public:
  L1NmpcController(const VehicleParams& nominal, const OcpConfig& ocp, const L1Config& l1,
                   std::shared_ptr<const Sampler> sampler, double control_dt);
  RotorCommand step(double t, const VehicleState& measured, LogRow& row) override;
  double inner_period() const override { return period_; }
  RotorCommand inner_update(double t, const VehicleState& measured) override;

 private:
  NmpcController base_;
  L1Augmentation l1_;
  double period_;
  RotorCommand u_mpc_held_;
};

std::unique_ptr<FlightController> make_controller(const ScenarioConfig& cfg,
                                                  std::shared_ptr<const Sampler> sampler);
std::shared_ptr<const Sampler> make_sampler(const ScenarioConfig& cfg);

/// Closed-loop run: the plant integrates mismatched parameters and wind at
/// sim_dt, the controller sees the nominal model at control_dt. Deterministic
/// for a given config and seed.
FlightLog run_scenario(const ScenarioConfig& cfg);

/// Throws std::invalid_argument on an empty log.
Metrics compute_metrics(const FlightLog& log);

struct SweepEntry {
  double v_peak = 0.0;
  ControllerType controller = ControllerType::nmpc;
  Metrics metrics;
  /// 100 * (1 - rmse / baseline_rmse) vs the plain controller at the same
  /// speed; unset when either run crashed or no baseline exists.
  std::optional<double> reduction_pct;
};

struct SweepTable {
  std::vector<SweepEntry> entries;
};

/// Runs every (controller, speed) pair on copies of the template with
/// identical gains. Per-run crashes become table entries, never aborts.
SweepTable sweep(const ScenarioConfig& tmpl, const std::vector<double>& v_peaks,
                 const std::vector<ControllerType>& controllers);

double reduction_percent(double baseline_rmse, double candidate_rmse);

/// Stable-column-order table writers; identical inputs give identical bytes.
void write_metrics_csv(std::ostream& os, const std::string& run_name, const Metrics& m);
void write_sweep_csv(std::ostream& os, const SweepTable& table);

}  // namespace quad
