#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "slipnet/error.hpp"
#include "slipnet/rover_sim.hpp"

using namespace slipnet;

namespace {

SoilCatalog uniform_catalog(double s_max, double rise, double noise) {
  return SoilCatalog({{0, "u", s_max, rise, noise, {0, 0, 0, 0}}});
}

TerrainGrid uniform_grid(double w = 20, double h = 20) {
  const int n = cells_along(w, 0.5) * cells_along(h, 0.5);
  return TerrainGrid(w, h, 0.5, std::vector<SoilId>(static_cast<std::size_t>(n), 0));
}

RoverParams quiet() {
  RoverParams p;
  p.vo_noise_std = 0.0;
  return p;
}

const SlipSample* find(const StepResult& r, Wheel w) {
  for (const auto& s : r.samples)
    if (s.wheel == w) return &s;
  return nullptr;
}

}  // namespace

TEST(Step, ZeroSlipStraightAdvance) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  RoverState s{5, 5, 0, 0};
  const auto r = step(s, 3, 3, 0.1, grid, cat, quiet(), rng);
  EXPECT_NEAR(r.state.x - 5.0, 0.03, 1e-12);
  EXPECT_NEAR(r.state.y, 5.0, 1e-12);
  ASSERT_EQ(r.samples.size(), 3u);
  for (const auto& smp : r.samples) {
    EXPECT_NEAR(smp.slip, 0.0, 1e-12);
    EXPECT_NEAR(smp.v_ref, 0.3, 1e-12);
  }
  EXPECT_FALSE(r.command_clamped);
}

TEST(Step, ZeroSlipWithVoNoiseStaysNearZero) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(2);
  RoverParams p;
  for (int i = 0; i < 200; ++i) {
    const auto r = step({5, 5, 0, 0}, 3, 3, 0.1, grid, cat, p, rng);
    for (const auto& smp : r.samples) {
      EXPECT_GE(smp.slip, 0.0);
      EXPECT_LE(smp.slip, 6 * p.vo_noise_std / 0.3);
    }
  }
}

TEST(Step, SpinInPlace) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  const auto r = step({5, 5, 0.3, 0}, -3, 3, 0.1, grid, cat, quiet(), rng);
  EXPECT_NEAR(r.state.x, 5.0, 1e-12);
  EXPECT_NEAR(r.state.y, 5.0, 1e-12);
  EXPECT_NEAR(r.state.heading, 0.3 + 0.6 / 0.3 * 0.1, 1e-12);
  EXPECT_TRUE(r.samples.empty());
}

TEST(Step, SaturatedSoilHalvesAdvance) {
  const auto cat = uniform_catalog(0.5, 1e9, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  const auto r = step({5, 5, 0, 0}, 3, 3, 0.1, grid, cat, quiet(), rng);
  EXPECT_NEAR(r.state.x - 5.0, 0.015, 1e-12);
  ASSERT_NE(find(r, Wheel::kLeft), nullptr);
  EXPECT_NEAR(find(r, Wheel::kLeft)->slip, 0.5, 1e-12);
  EXPECT_NEAR(find(r, Wheel::kRight)->slip, 0.5, 1e-12);
  EXPECT_NEAR(find(r, Wheel::kBodyMean)->slip, 0.5, 1e-12);
}

TEST(Step, LoggedSlipEqualsPlantedCurveWithoutNoise) {
  const auto cat = uniform_catalog(0.4, 3.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  for (double w : {0.5, 1.0, 2.0, 3.5}) {
    const auto r = step({5, 5, 1.0, 0}, w, w, 0.05, grid, cat, quiet(), rng);
    for (const auto& smp : r.samples) EXPECT_NEAR(smp.slip, cat.at(0).expected_slip(smp.v_ref), 1e-12);
  }
}

TEST(Step, ClampsOverspeedCommands) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  RoverParams p = quiet();
  const auto r = step({5, 5, 0, 0}, 10, 10, 0.1, grid, cat, p, rng);
  EXPECT_TRUE(r.command_clamped);
  EXPECT_NEAR(r.state.x - 5.0, p.max_surface_speed() * 0.1, 1e-12);
}

TEST(Step, DisplacementBounded) {
  const auto cat = uniform_catalog(0.3, 4.0, 0.05);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  RoverParams p;
  RoverState s{10, 10, 0, 0};
  for (int i = 0; i < 500; ++i) {
    const auto r = step(s, u(rng), u(rng), 0.05, grid, cat, p, rng);
    EXPECT_LE(std::hypot(r.state.x - s.x, r.state.y - s.y), p.max_surface_speed() * 0.05 + 1e-12);
    EXPECT_GT(r.state.heading, -std::numbers::pi);
    EXPECT_LE(r.state.heading, std::numbers::pi);
    for (const auto& smp : r.samples) {
      EXPECT_GE(smp.slip, 0.0);
      EXPECT_LT(smp.slip, 1.0);
      EXPECT_GT(smp.v_ref, 0.0);
    }
  }
}

TEST(Step, Errors) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  std::mt19937_64 rng(1);
  EXPECT_THROW(step({5, 5, 0, 0}, 1, 1, 0.0, grid, cat, quiet(), rng), InvalidArgument);
  EXPECT_THROW(step({5, 5, 0, 0}, 1, 1, 0.2, grid, cat, quiet(), rng), InvalidArgument);
  EXPECT_THROW(step({-1.0, 5, 0, 0}, 1, 1, 0.1, grid, cat, quiet(), rng), OutOfBounds);
}

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5), 0.5, 1e-15);
}

TEST(FollowPath, StraightPathReachesGoal) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  const std::vector<Waypoint> wps{{2, 10}, {7, 10}};
  const auto t = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 1);
  EXPECT_EQ(t.termination, Termination::kGoalReached);
  const auto& last = t.states.back();
  EXPECT_LE(std::hypot(last.x - 7, last.y - 10), 0.2 + 1e-9);
  for (std::size_t i = 1; i < t.states.size(); ++i) EXPECT_GT(t.states[i].t, t.states[i - 1].t);
}

TEST(FollowPath, Deterministic) {
  const auto cat = default_catalog();
  const auto grid = generate_terrain(1, cat, TerrainPattern::kVoronoiPatches, 20, 20, 0.1);
  const std::vector<Waypoint> wps{{2, 2}, {15, 6}, {5, 17}};
  const auto a = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 77);
  const auto b = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 77);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a.samples.empty());
  const auto c = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 78);
  EXPECT_FALSE(a == c);
}

TEST(FollowPath, SlipRisesAcrossStripeBoundary) {
  const SoilCatalog cat({{0, "firm", 0.05, 8.0, 0.01, {0, 0, 0, 0}}, {1, "loose", 0.5, 8.0, 0.01, {1, 1, 1, 1}}});
  PatternParams pp;
  pp.stripe_width_m = 10.0;
  const auto grid = generate_terrain(1, cat, TerrainPattern::kStripes, 20, 20, 0.1, pp);
  const std::vector<Waypoint> wps{{3, 10}, {17, 10}};
  PathOptions opt;
  opt.duration_s = 120;
  const auto t = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 5, opt);
  double a = 0, b = 0;
  int na = 0, nb = 0;
  for (const auto& s : t.samples) {
    if (s.wheel != Wheel::kBodyMean) continue;
    (s.x < 10 ? a : b) += s.slip;
    (s.x < 10 ? na : nb) += 1;
  }
  ASSERT_GT(na, 0);
  ASSERT_GT(nb, 0);
  EXPECT_GT(b / nb, a / na);
}

TEST(FollowPath, Errors) {
  const auto cat = uniform_catalog(0.0, 1.0, 0.0);
  const auto grid = uniform_grid();
  EXPECT_THROW(follow_path({{1, 1}}, RoverParams{}, PdGains{}, grid, cat, 1), InvalidArgument);
  EXPECT_THROW(follow_path({{1, 1}, {25, 1}}, RoverParams{}, PdGains{}, grid, cat, 1), InvalidArgument);
}

TEST(FollowPath, SamplesNeverNegative) {
  const auto cat = default_catalog();
  const auto grid = generate_terrain(4, cat, TerrainPattern::kCheckerboard, 20, 20, 0.1);
  const std::vector<Waypoint> wps{{2, 2}, {18, 3}, {3, 18}, {17, 17}};
  PathOptions opt;
  opt.forward_speed = 0.1;
  const auto t = follow_path(wps, RoverParams{}, PdGains{}, grid, cat, 9, opt);
  for (const auto& s : t.samples) {
    EXPECT_GE(s.slip, 0.0);
    EXPECT_LT(s.slip, 1.0);
  }
}

TEST(Wheel, Names) {
  for (auto w : {Wheel::kLeft, Wheel::kRight, Wheel::kBodyMean}) EXPECT_EQ(wheel_from_string(to_string(w)), w);
  EXPECT_THROW(wheel_from_string("front"), InvalidArgument);
}
