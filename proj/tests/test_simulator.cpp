#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ccsearch/simulator.hpp"

using namespace ccsearch;

namespace {

Genome base_genome() {
  Genome g;
  g.ego_init_dist_m = 60.0;
  g.ego_speed_kmh = 36.0;  // 10 m/s
  g.ego_brake = 0.0;
  g.adv_init_dist_m = 60.0;
  g.adv_speed_kmh = 36.0;
  g.safety_dist_m = 0.0;
  g.crash_dist_m = 1.0;
  return g;
}

}  // namespace

// --- compute_ttc ---------------------------------------------------------------

TEST(ComputeTtc, Arithmetic) { EXPECT_DOUBLE_EQ(compute_ttc(10.0, 5.0), 2.0); }

TEST(ComputeTtc, NotApproachingIsInfinite) {
  EXPECT_TRUE(std::isinf(compute_ttc(10.0, 0.0)));
  EXPECT_TRUE(std::isinf(compute_ttc(10.0, -3.0)));
}

TEST(ComputeTtc, ContactIsZero) { EXPECT_DOUBLE_EQ(compute_ttc(0.0, 3.0), 0.0); }

// --- step ----------------------------------------------------------------------

namespace {

struct StepFixture {
  PathPair paths = build_paths(template_for(ScenarioId::A));
  SimulationConfig config;

  std::pair<VehicleState, VehicleState> states_at(const Genome& g) {
    VehicleState ego, adv;
    ego.arc_position_m = paths.ego_conflict_s - g.ego_init_dist_m;
    ego.speed_mps = kmh_to_mps(g.ego_speed_kmh);
    ego.position = paths.ego.point_at(ego.arc_position_m);
    ego.heading_rad = paths.ego.heading_at(ego.arc_position_m);
    adv.arc_position_m = paths.adv_conflict_s - g.adv_init_dist_m;
    adv.speed_mps = kmh_to_mps(g.adv_speed_kmh);
    adv.position = paths.adv.point_at(adv.arc_position_m);
    adv.heading_rad = paths.adv.heading_at(adv.arc_position_m);
    return {ego, adv};
  }
};

}  // namespace

TEST(Step, NoBrakeOutsideSafetyDistance) {
  StepFixture f;
  Genome g = base_genome();
  g.safety_dist_m = 0.5;  // vehicles start ~tens of meters apart
  g.ego_brake = 1.0;
  const auto next = step(f.states_at(g), g, f.paths, 0.05);
  EXPECT_DOUBLE_EQ(next.first.speed_mps, kmh_to_mps(g.ego_speed_kmh));
}

TEST(Step, ZeroGainNeverDecelerates) {
  StepFixture f;
  Genome g = base_genome();
  g.safety_dist_m = 20.0;
  g.ego_brake = 0.0;
  g.ego_init_dist_m = 5.0;
  g.adv_init_dist_m = 5.0;  // separation below safety distance and closing
  auto states = f.states_at(g);
  for (int i = 0; i < 20; ++i) {
    states = step(states, g, f.paths, 0.05);
    ASSERT_DOUBLE_EQ(states.first.speed_mps, kmh_to_mps(g.ego_speed_kmh));
  }
}

TEST(Step, FullBrakeStopsInClosedFormStepCount) {
  // Slow oncoming vehicle 16 m ahead inside the safety distance: uniform
  // deceleration at kMaxBrakeDecelMps2 zeroes the speed in
  // ceil(v0 / (a*dt)) steps, and the gap keeps closing throughout.
  PathPair paths;
  paths.ego = PathDef({PathPiece::line({0.0, 0.0}, {1000.0, 0.0})});
  paths.adv = PathDef({PathPiece::line({1000.0, 3.0}, {0.0, 3.0})});
  paths.ego_conflict_s = 500.0;
  paths.adv_conflict_s = 500.0;

  Genome g = base_genome();
  g.ego_speed_kmh = 50.0;
  g.adv_speed_kmh = 5.0;
  g.safety_dist_m = 20.0;
  g.ego_brake = 1.0;

  VehicleState ego, adv;
  ego.arc_position_m = 480.0;
  ego.speed_mps = kmh_to_mps(g.ego_speed_kmh);
  ego.position = paths.ego.point_at(ego.arc_position_m);
  ego.heading_rad = 0.0;
  adv.arc_position_m = 504.0;  // at x = 496, 16 m ahead of the ego
  adv.speed_mps = kmh_to_mps(g.adv_speed_kmh);
  adv.position = paths.adv.point_at(adv.arc_position_m);
  adv.heading_rad = 3.14159265358979323846;

  const double dt = 0.05;
  const double v0 = kmh_to_mps(g.ego_speed_kmh);
  const int expected_steps = static_cast<int>(std::ceil(v0 / (kMaxBrakeDecelMps2 * dt)));
  std::pair<VehicleState, VehicleState> states{ego, adv};
  int steps = 0;
  while (states.first.speed_mps > 0.0 && steps < 1000) {
    states = step(states, g, paths, dt);
    ++steps;
  }
  EXPECT_EQ(steps, expected_steps);
}

// --- run -----------------------------------------------------------------------

TEST(Run, DegenerateSpawnOverlapIsInvalid) {
  Genome g = base_genome();
  g.ego_init_dist_m = 0.0;
  g.adv_init_dist_m = 0.0;  // both spawn at the conflict point
  g.crash_dist_m = 5.0;
  const auto out = run(template_for(ScenarioId::A), g, SimulationConfig{});
  EXPECT_FALSE(out.valid);
  ASSERT_TRUE(out.invalid_reason.has_value());
  EXPECT_EQ(*out.invalid_reason, InvalidReason::degenerate_spawn_overlap);
  EXPECT_FALSE(out.collision);
  EXPECT_FALSE(out.md_cm.has_value());
}

TEST(Run, NoInteractionWhenBothVehiclesStayFar) {
  // Both vehicles crawl from the far ends of their arms: geometric lower
  // bound on their separation stays above the interaction radius.
  const auto paths = build_paths(template_for(ScenarioId::A));
  Genome g = base_genome();
  g.ego_init_dist_m = 150.0;
  g.adv_init_dist_m = 150.0;
  g.ego_speed_kmh = 5.0;
  g.adv_speed_kmh = 5.0;
  const SimulationConfig config;

  // oracle: straight-line closest approach of two points moving at constant
  // speed along their (straight, pre-intersection) approach lanes
  const double v = kmh_to_mps(5.0);
  double min_sep = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= config.horizon_s; t += config.timestep_s / 2.0) {
    const Vec2 pe = paths.ego.point_at(paths.ego_conflict_s - 150.0 + v * t);
    const Vec2 pa = paths.adv.point_at(paths.adv_conflict_s - 150.0 + v * t);
    min_sep = std::min(min_sep, (pe - pa).norm());
  }
  ASSERT_GE(min_sep, config.interaction_radius_m);

  const auto out = run(paths, g, config);
  EXPECT_FALSE(out.valid);
  ASSERT_TRUE(out.invalid_reason.has_value());
  EXPECT_EQ(*out.invalid_reason, InvalidReason::no_interaction);
}

TEST(Run, CollisionIffSeparationReachesCrashDistance) {
  SplitRng root(2024);
  const auto paths = build_paths(template_for(ScenarioId::C));
  const SimulationConfig config;
  int collisions = 0;
  for (int i = 0; i < 300; ++i) {
    SplitRng rng = root.split(i);
    Genome g;
    g.ego_init_dist_m = rng.uniform(0.0, 150.0);
    g.ego_speed_kmh = rng.uniform(5.0, 80.0);
    g.ego_brake = rng.uniform(0.0, 1.0);
    g.adv_init_dist_m = rng.uniform(0.0, 150.0);
    g.adv_speed_kmh = rng.uniform(5.0, 80.0);
    g.safety_dist_m = rng.uniform(0.0, 20.0);
    g.crash_dist_m = rng.uniform(0.0, 5.0);
    const auto out = run(paths, g, config);
    if (!out.valid) continue;
    double min_sep = std::numeric_limits<double>::infinity();
    for (const auto& s : out.trace) min_sep = std::min(min_sep, s.separation_m);
    EXPECT_EQ(out.collision, min_sep <= g.crash_dist_m);
    collisions += out.collision;
  }
  EXPECT_GT(collisions, 0);  // the sample must exercise both branches
}

TEST(Run, DeterministicTraces) {
  const auto paths = build_paths(template_for(ScenarioId::B));
  Genome g = base_genome();
  g.ego_brake = 0.7;
  g.safety_dist_m = 12.0;
  const auto a = run(paths, g, SimulationConfig{});
  const auto b = run(paths, g, SimulationConfig{});
  ASSERT_EQ(a.trace.size(), b.trace.size());
  std::ostringstream ca, cb;
  write_trace_csv(a, ca);
  write_trace_csv(b, cb);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(Run, BrakingSpeedNonIncreasingWhileActive) {
  const auto paths = build_paths(template_for(ScenarioId::A));
  Genome g = base_genome();
  g.ego_brake = 0.9;
  g.safety_dist_m = 20.0;
  g.crash_dist_m = 0.2;
  const auto out = run(paths, g, SimulationConfig{});
  for (std::size_t i = 1; i < out.trace.size(); ++i) {
    const auto& prev = out.trace[i - 1];
    const bool braking = prev.separation_m < g.safety_dist_m && prev.closing_speed_mps > 0.0;
    if (braking) {
      EXPECT_LE(out.trace[i].ego.speed_mps, prev.ego.speed_mps + 1e-12);
    }
  }
}

TEST(Run, MaxClosingSpeedStepDefinesDmsAndTtc) {
  const auto paths = build_paths(template_for(ScenarioId::A));
  Genome g = base_genome();
  g.crash_dist_m = 0.0;  // keep the full horizon
  const auto out = run(paths, g, SimulationConfig{});
  ASSERT_TRUE(out.valid);
  std::size_t ms = 0;
  for (std::size_t i = 0; i < out.trace.size(); ++i)
    if (out.trace[i].closing_speed_mps > out.trace[ms].closing_speed_mps) ms = i;
  EXPECT_DOUBLE_EQ(*out.d_ms_cm, out.trace[ms].separation_m * 100.0);
  EXPECT_DOUBLE_EQ(*out.ttc_ms_cs,
                   compute_ttc(out.trace[ms].separation_m, out.trace[ms].closing_speed_mps) * 100.0);
}

TEST(Run, HalvingTimestepIsStableOnProbeGenomes) {
  // Discretization check on moderate probe genomes (no grazing passes).
  const auto paths = build_paths(template_for(ScenarioId::A));
  SimulationConfig coarse, fine;
  fine.timestep_s = coarse.timestep_s / 2.0;
  const double probes[][7] = {
      {40.0, 30.0, 0.0, 60.0, 30.0, 0.0, 2.0},
      {80.0, 40.0, 0.5, 70.0, 35.0, 10.0, 1.0},
      {100.0, 25.0, 1.0, 90.0, 30.0, 15.0, 3.0},
      {55.0, 45.0, 0.2, 75.0, 50.0, 5.0, 2.5},
  };
  for (const auto& p : probes) {
    const Genome g{p[0], p[1], p[2], p[3], p[4], p[5], p[6]};
    const auto a = run(paths, g, coarse);
    const auto b = run(paths, g, fine);
    ASSERT_EQ(a.valid, b.valid);
    if (a.valid && !a.collision && !b.collision) EXPECT_NEAR(*a.md_cm, *b.md_cm, 5.0);
  }
}

TEST(ClassifyValidity, ThresholdIsClosedOnTheInvalidSide) {
  const SimulationConfig config;
  std::vector<TraceStep> trace(3);
  trace[0].separation_m = 120.0;
  trace[1].separation_m = config.interaction_radius_m;  // exactly at the radius
  trace[2].separation_m = 80.0;
  auto [valid, reason] = classify_validity(trace, config, 1.0);
  EXPECT_FALSE(valid);
  EXPECT_EQ(*reason, InvalidReason::no_interaction);

  trace[1].separation_m = config.interaction_radius_m - 1e-9;
  std::tie(valid, reason) = classify_validity(trace, config, 1.0);
  EXPECT_TRUE(valid);
  EXPECT_FALSE(reason.has_value());

  trace[1].separation_m = 3.0;
  std::tie(valid, reason) = classify_validity(trace, config, 1.0);
  EXPECT_TRUE(valid);
}

TEST(SimulationConfig, Validation) {
  SimulationConfig c;
  EXPECT_NO_THROW(c.validate());
  c.timestep_s = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimulationConfig{};
  c.horizon_s = c.timestep_s * 5.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(WriteTraceCsv, HeaderAndFixedFormat) {
  const auto out = run(template_for(ScenarioId::A), base_genome(), SimulationConfig{});
  std::ostringstream os;
  write_trace_csv(out, os);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "time_s,ego_x,ego_y,ego_v,adv_x,adv_y,adv_v,separation_m,closing_mps");
  const std::string second = text.substr(text.find('\n') + 1);
  EXPECT_EQ(second.substr(0, second.find(',')), "0.000000");
}
