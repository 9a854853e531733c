// Scratch smoke runner; replaced by the real CLI.
#include <cstdio>
#include <cstdlib>

#include "quad/harness.hpp"

using namespace quad;

static void run_case(ScenarioConfig cfg, ControllerType ctrl, double v, const char* label) {
  cfg.controller = ctrl;
  cfg.circle.v_peak = v;
  const FlightLog log = run_scenario(cfg);
  if (log.status == RunStatus::crashed) {
    std::printf("%-18s v=%4.1f  CRASH at t=%.2f\n", label, v, log.crash_time);
    return;
  }
  const Metrics m = compute_metrics(log);
  std::printf("%-18s v=%4.1f  rmse=%.8f ssz=%.5f maxerr=%.4f sat=%.3f solve=%.2fms\n", label, v,
              m.position_rmse, m.steady_state_z_error, m.max_position_error,
              m.saturation_fraction, 1e3 * m.mean_solve_time);
}

static void apply_tuning(ScenarioConfig& cfg, double as_v, double as_w, double cutoff,
                         double umax) {
  cfg.l1.As_diag << as_v, as_v, as_v, as_w, as_w, as_w;
  cfg.l1.cutoff.setConstant(cutoff);
  cfg.nominal_params.thrust_max = umax;
}

int main(int argc, char** argv) {
  double as_v = -3.0, as_w = -10.0, cutoff = 15.0, umax = 6.0;
  if (argc > 4) {
    as_v = std::atof(argv[1]);
    as_w = std::atof(argv[2]);
    cutoff = std::atof(argv[3]);
    umax = std::atof(argv[4]);
  }
  const bool quick = argc > 5;
  std::printf("== as_v=%.1f as_w=%.1f cutoff=%.1f umax=%.2f\n", as_v, as_w, cutoff, umax);

  ScenarioConfig nominal = load_scenario("configs/circle_nominal.cfg");
  apply_tuning(nominal, as_v, as_w, cutoff, umax);
  for (double v : quick ? std::vector<double>{8.0, 10.0}
                        : std::vector<double>{2.5, 8.0, 10.0}) {
    run_case(nominal, ControllerType::nmpc, v, "nominal nmpc");
    run_case(nominal, ControllerType::l1_nmpc, v, "nominal l1");
  }
  if (quick) return 0;

  ScenarioConfig mass = load_scenario("configs/circle_mass90.cfg");
  apply_tuning(mass, as_v, as_w, cutoff, umax);
  for (double v : {2.5, 4.0, 10.0}) {
    run_case(mass, ControllerType::nmpc, v, "mass90 nmpc");
    run_case(mass, ControllerType::nmpc_i, v, "mass90 nmpc_i");
    run_case(mass, ControllerType::l1_nmpc, v, "mass90 l1");
  }

  ScenarioConfig m60 = load_scenario("configs/circle_mass60.cfg");
  apply_tuning(m60, as_v, as_w, cutoff, umax);
  run_case(m60, ControllerType::nmpc, 2.5, "mass60 nmpc");
  run_case(m60, ControllerType::l1_nmpc, 2.5, "mass60 l1");

  ScenarioConfig arm = load_scenario("configs/circle_arm25.cfg");
  apply_tuning(arm, as_v, as_w, cutoff, umax);
  run_case(arm, ControllerType::l1_nmpc, 2.5, "arm25 l1");

  // Constant-force recovery at hover: steady-state |g*u_l1 + a_dist| / |a_dist|.
  ScenarioConfig zf = load_scenario("configs/hover_zforce.cfg");
  apply_tuning(zf, as_v, as_w, cutoff, umax);
  const FlightLog log = run_scenario(zf);
  const double m_kg = zf.nominal_params.mass;
  Vec6 a_dist = Vec6::Zero();
  a_dist(2) = 1.0 / m_kg;
  double worst_after_1s = 0.0, final_ratio = 0.0;
  for (const LogRow& r : log.rows) {
    const UncertaintyBasis basis =
        build_basis(r.state, RotorCommand{r.mpc_raw}, zf.nominal_params);
    const double ratio = (basis.g_mat * r.u_l1 + a_dist).norm() / a_dist.norm();
    if (r.t >= 1.0) worst_after_1s = std::max(worst_after_1s, ratio);
    final_ratio = ratio;
  }
  std::printf("zforce recovery: worst ratio after 1s=%.4f final=%.4f\n", worst_after_1s,
              final_ratio);
  return 0;
}
