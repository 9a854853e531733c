#include "quad/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "quad/errors.hpp"

namespace quad {

void CircleSpec::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("circle: radius must be positive");
  if (!(v_peak > 0.0)) throw std::invalid_argument("circle: v_peak must be positive");
  if (!(ramp_time >= 0.0)) throw std::invalid_argument("circle: ramp_time must be nonnegative");
  if (!(duration > 0.0)) throw std::invalid_argument("circle: duration must be positive");
}

namespace {

RotorCommand hover_split(double hover_thrust_total) {
  RotorCommand ff;
  ff.thrusts.setConstant(hover_thrust_total / 4.0);
  return ff;
}

}  // namespace

ReferencePoint circle_sample(const CircleSpec& spec, double hover_thrust_total, double t) {
  if (t < 0.0 || t > spec.duration) {
    throw std::invalid_argument("circle_sample: t outside [0, duration]");
  }
  double speed, arc;
  if (spec.ramp_time > 0.0 && t < spec.ramp_time) {
    speed = spec.v_peak * t / spec.ramp_time;
    arc = 0.5 * spec.v_peak * t * t / spec.ramp_time;
  } else {
    speed = spec.v_peak;
    arc = 0.5 * spec.v_peak * spec.ramp_time + spec.v_peak * (t - spec.ramp_time);
  }
  const double theta = arc / spec.radius;
  const double theta_dot = speed / spec.radius;
  const double c = std::cos(theta), s = std::sin(theta);

  ReferencePoint p;
  p.state.position = spec.center + Vec3(spec.radius * c, spec.radius * s, spec.altitude);
  p.state.velocity = Vec3(-speed * s, speed * c, 0.0);
  p.state.attitude = Quaternion::from_yaw(theta + M_PI / 2.0).normalized();
  p.state.body_rates = Vec3(0.0, 0.0, theta_dot);
  p.feedforward = hover_split(hover_thrust_total);
  return p;
}

ReferencePoint hover_sample(const Vec3& point, double hover_thrust_total, double t) {
  (void)t;
  ReferencePoint p;
  p.state.position = point;
  p.feedforward = hover_split(hover_thrust_total);
  return p;
}

CircleSampler::CircleSampler(CircleSpec spec, double hover_thrust_total)
    : spec_(spec), hover_thrust_(hover_thrust_total) {
  spec_.validate();
}

ReferencePoint CircleSampler::sample(double t) const {
  return circle_sample(spec_, hover_thrust_, std::clamp(t, 0.0, spec_.duration));
}

TrackSampler::TrackSampler(std::vector<Row> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw ParseError("track has no data rows");
}

ReferencePoint TrackSampler::sample(double t) const {
  ReferencePoint p;
  if (t <= rows_.front().t) {
    p.state = rows_.front().state;
    p.feedforward = rows_.front().feedforward;
    return p;
  }
  if (t >= rows_.back().t) {
    p.state = rows_.back().state;
    p.feedforward = rows_.back().feedforward;
    return p;
  }
  const auto it = std::upper_bound(rows_.begin(), rows_.end(), t,
                                   [](double v, const Row& r) { return v < r.t; });
  const Row& hi = *it;
  const Row& lo = *(it - 1);
  const double a = (t - lo.t) / (hi.t - lo.t);

  p.state.position = (1.0 - a) * lo.state.position + a * hi.state.position;
  p.state.velocity = (1.0 - a) * lo.state.velocity + a * hi.state.velocity;
  p.state.body_rates = (1.0 - a) * lo.state.body_rates + a * hi.state.body_rates;
  p.state.attitude = slerp(lo.state.attitude, hi.state.attitude, a);
  p.feedforward = lo.feedforward;  // zero-order hold
  return p;
}

TrackSampler load_track(const std::string& path, double hover_thrust_total) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open track file: " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t\r");
      const auto e = item.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
  };

  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("track file is empty");
  ++line_no;
  const std::vector<std::string> header = split(line);
  std::map<std::string, int> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

  for (const char* req : {"t", "px", "py", "pz"}) {
    if (!col.count(req)) throw ParseError(std::string("track header missing column: ") + req, 1);
  }

  std::vector<TrackSampler::Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split(line);
    auto get = [&](const char* name, double fallback) {
      const auto it = col.find(name);
      if (it == col.end()) return fallback;
      if (it->second >= static_cast<int>(f.size()) || f[it->second].empty()) {
        throw ParseError("missing value for column " + std::string(name), line_no);
      }
      try {
        size_t pos = 0;
        const double v = std::stod(f[it->second], &pos);
        if (pos != f[it->second].size()) throw std::invalid_argument("trailing junk");
        return v;
      } catch (const std::exception&) {
        throw ParseError("bad number '" + f[it->second] + "' in column " + name, line_no);
      }
    };

    TrackSampler::Row r;
    r.t = get("t", 0.0);
    r.state.position = Vec3(get("px", 0.0), get("py", 0.0), get("pz", 0.0));
    r.state.velocity = Vec3(get("vx", 0.0), get("vy", 0.0), get("vz", 0.0));
    Quaternion q(get("qw", 1.0), get("qx", 0.0), get("qy", 0.0), get("qz", 0.0));
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw ParseError("attitude is not unit norm", line_no);
    }
    r.state.attitude = q.normalized();
    r.state.body_rates = Vec3(get("wx", 0.0), get("wy", 0.0), get("wz", 0.0));
    if (col.count("T0") || col.count("T1") || col.count("T2") || col.count("T3")) {
      r.feedforward.thrusts =
          Vec4(get("T0", 0.0), get("T1", 0.0), get("T2", 0.0), get("T3", 0.0));
    } else {
      r.feedforward.thrusts.setConstant(hover_thrust_total / 4.0);
    }

    if (rows.empty()) {
      if (r.t != 0.0) throw ParseError("first row must have t = 0", line_no);
    } else if (!(r.t > rows.back().t)) {
      throw ParseError("time is not strictly increasing", line_no);
    }
    rows.push_back(std::move(r));
  }
  return TrackSampler(std::move(rows));
}

}  // namespace quad
