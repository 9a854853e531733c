#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "quad/disturbance.hpp"
#include "quad/l1_adaptive.hpp"
#include "quad/nmpc.hpp"
#include "quad/trajectory.hpp"
#include "quad/types.hpp"

namespace quad {

/// Flat `key = value` file with dotted keys, `#` comments, and an optional
/// `defaults = <relative path>` line naming a base file whose values this
/// file overrides.
class KeyValueFile {
 public:
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_vector(const std::string& key, int expected_size) const;

  /// Keys read so far; used to reject unknown keys after extraction.
  void mark_used(const std::string& key) const;
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

enum class ControllerType { nmpc, nmpc_i, l1_nmpc };
enum class TrajectoryType { hover, circle, track };

std::string to_string(ControllerType t);
ControllerType controller_from_string(const std::string& s);

struct NoiseConfig {
  double pos_std = 0.0;   // m
  double att_std = 0.0;   // rad
  double vel_std = 0.0;   // m/s
  double rate_std = 0.0;  // rad/s

  bool any() const { return pos_std > 0.0 || att_std > 0.0 || vel_std > 0.0 || rate_std > 0.0; }
};

struct ScenarioConfig {
  VehicleParams nominal_params;
  ParamMismatch mismatch;
  WindField wind;

  TrajectoryType trajectory_type = TrajectoryType::hover;
  CircleSpec circle;
  Vec3 hover_point = Vec3::Zero();
  double hover_duration = 5.0;
  std::string track_file;

  ControllerType controller = ControllerType::nmpc;
  OcpConfig ocp;
  L1Config l1;

  double sim_dt = 0.0;
  double control_dt = 0.0;
  NoiseConfig noise;
  std::uint64_t seed = 0;

  std::string name;  // scenario file stem, used for output naming

  int substeps_per_control() const;
  void validate() const;
};

/// Loads and validates a scenario. Every key must resolve through the file
/// or its defaults chain; unknown keys are an error. Throws ParseError or
/// std::invalid_argument.
ScenarioConfig load_scenario(const std::string& path);

}  // namespace quad
