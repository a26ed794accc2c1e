#include "slipnet/rover_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slipnet/error.hpp"
#include "slipnet/slip_risk.hpp"

namespace slipnet {

void RoverParams::validate() const {
  if (!(wheel_radius > 0.0)) throw InvalidArgument("wheel_radius must be > 0");
  if (!(track_width > 0.0)) throw InvalidArgument("track_width must be > 0");
  if (!(max_wheel_speed > 0.0)) throw InvalidArgument("max_wheel_speed must be > 0");
  if (!(vo_noise_std >= 0.0)) throw InvalidArgument("vo_noise_std must be >= 0");
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

std::string to_string(Wheel w) {
  switch (w) {
    case Wheel::kLeft: return "left";
    case Wheel::kRight: return "right";
    case Wheel::kBodyMean: return "body_mean";
  }
  return "unknown";
}

Wheel wheel_from_string(const std::string& s) {
  if (s == "left") return Wheel::kLeft;
  if (s == "right") return Wheel::kRight;
  if (s == "body_mean") return Wheel::kBodyMean;
  throw InvalidArgument("unknown wheel '" + s + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kDuration: return "duration";
    case Termination::kGoalReached: return "goal_reached";
    case Termination::kLeftGrid: return "left_grid";
  }
  return "unknown";
}

bool Trajectory::operator==(const Trajectory& o) const {
  if (states.size() != o.states.size() || samples != o.samples ||
      termination != o.termination || clamped_commands != o.clamped_commands)
    return false;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& a = states[i];
    const auto& b = o.states[i];
    if (a.x != b.x || a.y != b.y || a.heading != b.heading || a.t != b.t) return false;
  }
  return true;
}

namespace {

struct ContactPoints {
  double lx, ly, rx, ry;
};

ContactPoints contacts(const RoverState& s, double track) {
  const double half = 0.5 * track;
  const double sx = -std::sin(s.heading) * half;
  const double sy = std::cos(s.heading) * half;
  return {s.x + sx, s.y + sy, s.x - sx, s.y - sy};
}

bool on_grid(const RoverState& s, const TerrainGrid& grid, double track) {
  const auto c = contacts(s, track);
  return grid.contains(s.x, s.y) && grid.contains(c.lx, c.ly) && grid.contains(c.rx, c.ry);
}

}  // namespace

StepResult step(const RoverState& state, double omega_left, double omega_right, double dt,
                const TerrainGrid& grid, const SoilCatalog& catalog, const RoverParams& params,
                std::mt19937_64& rng) {
  if (!(dt > 0.0 && dt <= 0.1)) throw InvalidArgument("step: dt must lie in (0, 0.1]");
  StepResult out;

  const double wmax = params.max_wheel_speed;
  const double wl = std::clamp(omega_left, -wmax, wmax);
  const double wr = std::clamp(omega_right, -wmax, wmax);
  out.command_clamped = (wl != omega_left) || (wr != omega_right);

  const double vref_l = params.wheel_radius * wl;
  const double vref_r = params.wheel_radius * wr;

  const auto c = contacts(state, params.track_width);
  const SoilSpec& soil_l = catalog.at(soil_at(grid, c.lx, c.ly));
  const SoilSpec& soil_r = catalog.at(soil_at(grid, c.rx, c.ry));

  // Slip reduces the wheel's surface speed magnitude in either direction.
  const double s_l = soil_l.sample_slip(std::abs(vref_l), rng);
  const double s_r = soil_r.sample_slip(std::abs(vref_r), rng);
  out.true_slip_left = s_l;
  out.true_slip_right = s_r;
  const double veff_l = vref_l * (1.0 - s_l);
  const double veff_r = vref_r * (1.0 - s_r);

  const double v = 0.5 * (veff_l + veff_r);
  const double w = (veff_r - veff_l) / params.track_width;

  RoverState next = state;
  if (std::abs(w) < 1e-12) {
    next.x += v * dt * std::cos(state.heading);
    next.y += v * dt * std::sin(state.heading);
  } else {
    const double h1 = state.heading + w * dt;
    next.x += v / w * (std::sin(h1) - std::sin(state.heading));
    next.y -= v / w * (std::cos(h1) - std::cos(state.heading));
  }
  next.heading = wrap_angle(state.heading + w * dt);
  next.t = state.t + dt;
  out.state = next;

  double v_meas = v;
  if (params.vo_noise_std > 0.0) {
    std::normal_distribution<double> vo(0.0, params.vo_noise_std);
    v_meas += vo(rng);
  }

  const double vref_body = 0.5 * (vref_l + vref_r);
  if (!(vref_body > 0.0)) return out;

  // Per-wheel travel speed from VO body speed and the yaw rate.
  const double half = 0.5 * params.track_width;
  const double vx_l = v_meas - w * half;
  const double vx_r = v_meas + w * half;

  auto emit = [&](Wheel wheel, double x, double y, SoilId soil, double vref, double vx,
                  double s) {
    if (s < 0.0 || s >= 1.0) return;  // braking events are not logged
    SlipSample smp;
    smp.t = next.t;
    smp.x = x;
    smp.y = y;
    smp.soil_true = soil;
    smp.v_ref = vref;
    smp.v_x = vx;
    smp.slip = s;
    smp.wheel = wheel;
    out.samples.push_back(smp);
  };

  double slip_l = 0.0;
  double slip_r = 0.0;
  const bool left_driving = vref_l > 0.0;
  const bool right_driving = vref_r > 0.0;
  if (left_driving) {
    slip_l = slip_ratio(vx_l, vref_l);
    emit(Wheel::kLeft, c.lx, c.ly, soil_l.id, vref_l, vx_l, slip_l);
  }
  if (right_driving) {
    slip_r = slip_ratio(vx_r, vref_r);
    emit(Wheel::kRight, c.rx, c.ry, soil_r.id, vref_r, vx_r, slip_r);
  }
  if (left_driving && right_driving && grid.contains(state.x, state.y)) {
    emit(Wheel::kBodyMean, state.x, state.y, soil_at(grid, state.x, state.y), vref_body,
         v_meas, 0.5 * (slip_l + slip_r));
  }
  return out;
}

Trajectory follow_path(const std::vector<Waypoint>& waypoints, const RoverParams& params,
                       const PdGains& gains, const TerrainGrid& grid, const SoilCatalog& catalog,
                       std::uint64_t seed, const PathOptions& options) {
  params.validate();
  if (waypoints.size() < 2) throw InvalidArgument("follow_path needs at least two waypoints");
  for (const auto& wp : waypoints)
    if (!grid.contains(wp.x, wp.y))
      throw InvalidArgument("waypoint (" + std::to_string(wp.x) + ", " + std::to_string(wp.y) +
                            ") outside terrain");
  if (!(options.dt > 0.0 && options.dt <= 0.1))
    throw InvalidArgument("follow_path: dt must lie in (0, 0.1]");
  if (!(options.log_period >= options.dt))
    throw InvalidArgument("follow_path: log_period must be >= dt");

  std::mt19937_64 rng(seed);
  Trajectory traj;

  RoverState s;
  s.x = waypoints[0].x;
  s.y = waypoints[0].y;
  s.heading = std::atan2(waypoints[1].y - waypoints[0].y, waypoints[1].x - waypoints[0].x);
  traj.states.push_back(s);

  const auto log_every =
      std::max<long>(1, std::lround(options.log_period / options.dt));
  const auto max_steps = static_cast<long>(std::ceil(options.duration_s / options.dt - 1e-9));
  const double vmax = params.max_surface_speed();
  const double half = 0.5 * params.track_width;

  std::size_t target = 1;
  double prev_err = 0.0;
  bool have_prev = false;
  traj.termination = Termination::kDuration;

  for (long k = 1; k <= max_steps; ++k) {
    // waypoint bookkeeping
    while (true) {
      const double dx = waypoints[target].x - s.x;
      const double dy = waypoints[target].y - s.y;
      const double dist = std::hypot(dx, dy);
      const bool last = target + 1 == waypoints.size();
      if (last && dist <= options.goal_tolerance) {
        traj.termination = Termination::kGoalReached;
        break;
      }
      if (!last && dist <= options.switch_radius) {
        ++target;
        continue;
      }
      break;
    }
    if (traj.termination == Termination::kGoalReached) break;

    const double desired =
        std::atan2(waypoints[target].y - s.y, waypoints[target].x - s.x);
    const double err = wrap_angle(desired - s.heading);
    const double derr = have_prev ? wrap_angle(err - prev_err) / options.dt : 0.0;
    prev_err = err;
    have_prev = true;
    const double yaw_cmd = gains.kp * err + gains.kd * derr;

    // Keep wheel commands inside the actuator limit, steering first.
    const double rot = std::clamp(yaw_cmd * half, -vmax, vmax);
    const double fwd = std::clamp(options.forward_speed, 0.0, vmax - std::abs(rot));
    const double omega_l = (fwd - rot) / params.wheel_radius;
    const double omega_r = (fwd + rot) / params.wheel_radius;

    StepResult r;
    try {
      r = step(s, omega_l, omega_r, options.dt, grid, catalog, params, rng);
    } catch (const OutOfBounds&) {
      traj.termination = Termination::kLeftGrid;
      break;
    }
    if (r.command_clamped) ++traj.clamped_commands;
    if (!on_grid(r.state, grid, params.track_width)) {
      traj.termination = Termination::kLeftGrid;
      break;
    }
    s = r.state;
    if (k % log_every == 0) {
      traj.states.push_back(s);
      traj.samples.insert(traj.samples.end(), r.samples.begin(), r.samples.end());
    }
  }
  return traj;
}

}  // namespace slipnet
