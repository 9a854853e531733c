#include "quad/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quad/errors.hpp"

namespace quad {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_into(const std::string& path, std::map<std::string, std::string>& values, int depth) {
  if (depth > 8) throw ParseError("defaults chain too deep (cycle?): " + path);
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);

  std::map<std::string, std::string> local;
  std::string base_file;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value' in " + path, line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key in " + path, line_no);
    if (key == "defaults") {
      base_file = value;
      continue;
    }
    local[key] = value;
  }

  if (!base_file.empty()) {
    const std::filesystem::path base =
        std::filesystem::path(path).parent_path() / base_file;
    parse_into(base.string(), values, depth + 1);
  }
  for (auto& [k, v] : local) values[k] = v;
}

}  // namespace

KeyValueFile KeyValueFile::load(const std::string& path) {
  KeyValueFile f;
  parse_into(path, f.values_, 0);
  return f;
}

const std::string& KeyValueFile::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParseError("missing config key: " + key);
  mark_used(key);
  return it->second;
}

void KeyValueFile::mark_used(const std::string& key) const { used_[key] = true; }

std::vector<std::string> KeyValueFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

double KeyValueFile::get_double(const std::string& key) const {
  const std::string& s = raw(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': bad number '" + s + "'");
  }
}

int KeyValueFile::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v)) throw ParseError("key '" + key + "': expected integer");
  return static_cast<int>(v);
}

std::uint64_t KeyValueFile::get_uint64(const std::string& key) const {
  const double v = get_double(key);
  if (v < 0.0 || v != std::floor(v)) throw ParseError("key '" + key + "': expected unsigned integer");
  return static_cast<std::uint64_t>(v);
}

std::string KeyValueFile::get_string(const std::string& key) const { return raw(key); }

std::vector<double> KeyValueFile::get_vector(const std::string& key, int expected_size) const {
  const std::string& s = raw(key);
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("key '" + key + "': bad vector element '" + item + "'");
    }
  }
  if (static_cast<int>(out.size()) != expected_size) {
    throw ParseError("key '" + key + "': expected " + std::to_string(expected_size) +
                     " comma-separated values, got " + std::to_string(out.size()));
  }
  return out;
}

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::nmpc:
      return "nmpc";
    case ControllerType::nmpc_i:
      return "nmpc_i";
    case ControllerType::l1_nmpc:
      return "l1_nmpc";
  }
  return "?";
}

ControllerType controller_from_string(const std::string& s) {
  if (s == "nmpc") return ControllerType::nmpc;
  if (s == "nmpc_i") return ControllerType::nmpc_i;
  if (s == "l1_nmpc") return ControllerType::l1_nmpc;
  throw ParseError("unknown controller type: " + s);
}

int ScenarioConfig::substeps_per_control() const {
  return static_cast<int>(std::llround(control_dt / sim_dt));
}

void ScenarioConfig::validate() const {
  nominal_params.validate();
  wind.validate();
  ocp.validate();
  if (controller == ControllerType::l1_nmpc) l1.validate();
  if (trajectory_type == TrajectoryType::circle) circle.validate();
  if (trajectory_type == TrajectoryType::hover && !(hover_duration > 0.0)) {
    throw std::invalid_argument("scenario: hover duration must be positive");
  }
  if (trajectory_type == TrajectoryType::track && track_file.empty()) {
    throw std::invalid_argument("scenario: track trajectory needs a track file");
  }
  if (!(sim_dt > 0.0) || !(control_dt > 0.0)) {
    throw std::invalid_argument("scenario: time steps must be positive");
  }
  const double ratio = control_dt / sim_dt;
  if (std::abs(ratio - std::llround(ratio)) > 1e-9 || std::llround(ratio) < 1) {
    throw std::invalid_argument("scenario: control_dt must be an integer multiple of sim_dt");
  }
  if (controller == ControllerType::l1_nmpc) {
    const double per_control = control_dt / l1.Ts;
    const double per_sim = l1.Ts / sim_dt;
    if (std::abs(per_control - std::llround(per_control)) > 1e-9 ||
        std::abs(per_sim - std::llround(per_sim)) > 1e-9 || l1.Ts > control_dt ||
        l1.Ts < sim_dt) {
      throw std::invalid_argument(
          "scenario: l1.ts must divide sim.control_dt and be a multiple of sim.dt");
    }
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  const KeyValueFile f = KeyValueFile::load(path);
  ScenarioConfig c;
  c.name = std::filesystem::path(path).stem().string();

  auto vec3 = [&](const std::string& key) {
    const auto v = f.get_vector(key, 3);
    return Vec3(v[0], v[1], v[2]);
  };
  auto vec4 = [&](const std::string& key) {
    const auto v = f.get_vector(key, 4);
    return Vec4(v[0], v[1], v[2], v[3]);
  };
  auto vec6 = [&](const std::string& key) {
    const auto v = f.get_vector(key, 6);
    Vec6 out;
    for (int i = 0; i < 6; ++i) out(i) = v[i];
    return out;
  };

  c.nominal_params.mass = f.get_double("vehicle.mass");
  c.nominal_params.inertia_diag = vec3("vehicle.inertia");
  c.nominal_params.arm_x = vec4("vehicle.arm_x");
  c.nominal_params.arm_y = vec4("vehicle.arm_y");
  c.nominal_params.drag_torque_coeff = f.get_double("vehicle.drag_torque_coeff");
  c.nominal_params.drag_matrix_diag = vec3("vehicle.drag");
  c.nominal_params.gravity = f.get_double("vehicle.gravity");
  c.nominal_params.thrust_min = f.get_double("vehicle.thrust_min");
  c.nominal_params.thrust_max = f.get_double("vehicle.thrust_max");

  c.mismatch.mass_delta = f.get_double("mismatch.mass_delta");
  c.mismatch.inertia_scale = vec3("mismatch.inertia_scale");
  c.mismatch.arm_scale = vec4("mismatch.arm_scale");
  c.mismatch.drag_scale = vec3("mismatch.drag_scale");

  const std::string wind_mode = f.get_string("wind.mode");
  if (wind_mode == "none") {
    c.wind.mode = WindMode::none;
  } else if (wind_mode == "constant") {
    c.wind.mode = WindMode::constant;
  } else if (wind_mode == "fan_zone") {
    c.wind.mode = WindMode::fan_zone;
  } else {
    throw ParseError("unknown wind.mode: " + wind_mode);
  }
  c.wind.force = vec3("wind.force");
  c.wind.zone_center = vec3("wind.zone_center");
  c.wind.zone_radius = f.get_double("wind.zone_radius");
  c.wind.zone_force = vec3("wind.zone_force");
  c.wind.seed = f.get_uint64("wind.seed");

  const std::string traj = f.get_string("trajectory.type");
  if (traj == "hover") {
    c.trajectory_type = TrajectoryType::hover;
  } else if (traj == "circle") {
    c.trajectory_type = TrajectoryType::circle;
  } else if (traj == "track") {
    c.trajectory_type = TrajectoryType::track;
  } else {
    throw ParseError("unknown trajectory.type: " + traj);
  }
  c.hover_point = vec3("trajectory.hover_point");
  c.hover_duration = f.get_double("trajectory.hover_duration");
  c.track_file = f.get_string("trajectory.track_file");
  if (!c.track_file.empty() && c.track_file.front() != '/') {
    c.track_file = (std::filesystem::path(path).parent_path() / c.track_file).string();
  }
  c.circle.radius = f.get_double("circle.radius");
  c.circle.v_peak = f.get_double("circle.v_peak");
  c.circle.ramp_time = f.get_double("circle.ramp_time");
  c.circle.center = vec3("circle.center");
  c.circle.altitude = f.get_double("circle.altitude");
  c.circle.duration = f.get_double("circle.duration");

  c.controller = controller_from_string(f.get_string("controller.type"));

  c.ocp.horizon_steps = f.get_int("ocp.horizon_steps");
  c.ocp.horizon_time = f.get_double("ocp.horizon_time");
  {
    const auto w = f.get_vector("ocp.state_weights", 13);
    for (int i = 0; i < 13; ++i) c.ocp.state_weights(i) = w[i];
  }
  c.ocp.input_weights = vec4("ocp.input_weights");
  c.ocp.integrator_enabled = c.controller == ControllerType::nmpc_i;
  c.ocp.integrator_weight = vec3("ocp.integrator_weight");
  c.ocp.integrator_leak = f.get_double("ocp.integrator_leak");
  c.ocp.sqp_iters_per_step = f.get_int("ocp.sqp_iters");
  c.ocp.qp_tolerance = f.get_double("ocp.qp_tolerance");

  c.l1.As_diag = vec6("l1.as_diag");
  c.l1.cutoff = vec4("l1.cutoff");
  c.l1.Ts = f.get_double("l1.ts");
  c.l1.sigma_clip = vec6("l1.sigma_clip");

  c.sim_dt = f.get_double("sim.dt");
  c.control_dt = f.get_double("sim.control_dt");
  c.noise.pos_std = f.get_double("sim.noise_pos");
  c.noise.att_std = f.get_double("sim.noise_att");
  c.noise.vel_std = f.get_double("sim.noise_vel");
  c.noise.rate_std = f.get_double("sim.noise_rate");
  c.seed = f.get_uint64("sim.seed");

  const auto unknown = f.unused_keys();
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ParseError(msg);
  }

  c.validate();
  return c;
}

}  // namespace quad
