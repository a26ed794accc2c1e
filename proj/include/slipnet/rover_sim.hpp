#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "slipnet/class_label.hpp"
#include "slipnet/terrain.hpp"

namespace slipnet {

struct RoverParams {
  double wheel_radius = 0.1;    // m
  double track_width = 0.3;     // m
  double mass = 10.0;           // kg, metadata
  double max_wheel_speed = 3.5; // rad/s
  double vo_noise_std = 0.005;  // m/s, visual-odometry speed noise

  void validate() const;
  double max_surface_speed() const { return wheel_radius * max_wheel_speed; }
};

struct RoverState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double t = 0.0;
};

double wrap_angle(double a);

enum class Wheel { kLeft, kRight, kBodyMean };

std::string to_string(Wheel w);
Wheel wheel_from_string(const std::string& s);

struct SlipSample {
  double t = 0.0;
  double x = 0.0;  // contact point for per-wheel samples, body centre otherwise
  double y = 0.0;
  SoilId soil_true = -1;
  ClassLabel class_observed;
  double v_ref = 0.0;  // commanded surface speed, m/s
  double v_x = 0.0;    // measured travel speed, m/s
  double slip = 0.0;
  Wheel wheel = Wheel::kBodyMean;
  std::int32_t trajectory_id = -1;
  std::int32_t terrain_id = -1;

  bool operator==(const SlipSample&) const = default;
};

struct StepResult {
  RoverState state;
  std::vector<SlipSample> samples;  // left/right/body_mean when driving
  bool command_clamped = false;
  double true_slip_left = 0.0;
  double true_slip_right = 0.0;
};

// Advances one integration step. Wheel commands beyond max_wheel_speed are
// clamped (command_clamped set). Per-wheel slip is drawn from the soil under
// each wheel; the pose follows differential-drive kinematics on the
// slip-reduced wheel speeds. Throws InvalidArgument for dt outside (0, 0.1]
// and OutOfBounds when a wheel is off the grid.
StepResult step(const RoverState& state, double omega_left, double omega_right, double dt,
                const TerrainGrid& grid, const SoilCatalog& catalog, const RoverParams& params,
                std::mt19937_64& rng);

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
};

struct PdGains {
  double kp = 2.0;
  double kd = 0.3;
};

struct PathOptions {
  double duration_s = 30.0;
  double dt = 0.02;
  double log_period = 0.1;
  double forward_speed = 0.3;    // commanded body speed, m/s
  double goal_tolerance = 0.2;   // final waypoint
  double switch_radius = 0.3;    // intermediate waypoints
};

enum class Termination { kDuration, kGoalReached, kLeftGrid };

std::string to_string(Termination t);

struct Trajectory {
  std::vector<RoverState> states;   // logged poses, strictly increasing t
  std::vector<SlipSample> samples;  // logged at the logging period
  Termination termination = Termination::kDuration;
  std::size_t clamped_commands = 0;

  bool operator==(const Trajectory& o) const;
};

// PD heading controller with constant forward command. The start pose is the
// first waypoint facing the second. Throws InvalidArgument for fewer than two
// waypoints or any waypoint outside the grid.
Trajectory follow_path(const std::vector<Waypoint>& waypoints, const RoverParams& params,
                       const PdGains& gains, const TerrainGrid& grid, const SoilCatalog& catalog,
                       std::uint64_t seed, const PathOptions& options = {});

}  // namespace slipnet
