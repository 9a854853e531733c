#pragma once

#include <memory>
#include <string>
#include <vector>

#include "quad/types.hpp"

namespace quad {

struct ReferencePoint {
  VehicleState state;
  RotorCommand feedforward;
};

struct CircleSpec {
  double radius = 5.0;       // m
  double v_peak = 2.5;       // m/s
  double ramp_time = 5.0;    // s, linear speed ramp from rest
  Vec3 center = Vec3::Zero();
  double altitude = 1.0;     // m, offset above center
  double duration = 60.0;    // s

  void validate() const;
};

/// Sample on the ramped circle. The attitude reference is yaw-only, heading
/// along the velocity. Throws std::invalid_argument outside [0, duration].
ReferencePoint circle_sample(const CircleSpec& spec, double hover_thrust_total, double t);

/// Static reference at a point with identity attitude.
ReferencePoint hover_sample(const Vec3& point, double hover_thrust_total, double t);

/// Immutable reference source; queries outside [0, duration] clamp.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual ReferencePoint sample(double t) const = 0;
  virtual double duration() const = 0;
};

class CircleSampler final : public Sampler {
 public:
  CircleSampler(CircleSpec spec, double hover_thrust_total);
  ReferencePoint sample(double t) const override;
  double duration() const override { return spec_.duration; }

 private:
  CircleSpec spec_;
  double hover_thrust_;
};

class HoverSampler final : public Sampler {
 public:
  HoverSampler(Vec3 point, double hover_thrust_total, double duration)
      : point_(std::move(point)), hover_thrust_(hover_thrust_total), duration_(duration) {}
  ReferencePoint sample(double t) const override { return hover_sample(point_, hover_thrust_, t); }
  double duration() const override { return duration_; }

 private:
  Vec3 point_;
  double hover_thrust_;
  double duration_;
};

/// Time-stamped reference rows loaded from a comma-separated file. Position
/// and velocity interpolate linearly, attitude spherically, thrusts hold.
class TrackSampler final : public Sampler {
 public:
  struct Row {
    double t = 0.0;
    VehicleState state;
    RotorCommand feedforward;
  };

  TrackSampler(std::vector<Row> rows);
  ReferencePoint sample(double t) const override;
  double duration() const override { return rows_.back().t; }

 private:
  std::vector<Row> rows_;
};

/// Parses a track file. Header row names the columns; t and position are
/// required, everything else optional. Throws ParseError with the offending
/// line number on malformed input or non-monotonic time.
TrackSampler load_track(const std::string& path, double hover_thrust_total);

}  // namespace quad
