#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ccsearch/scenario.hpp"

namespace ccsearch {

/// Full-brake deceleration; the ego brakes at ego_brake times this.
inline constexpr double kMaxBrakeDecelMps2 = 8.0;

inline constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }

struct SimulationConfig {
  double timestep_s = 0.05;
  double horizon_s = 20.0;
  double interaction_radius_m = 50.0;

  bool operator==(const SimulationConfig&) const = default;

  void validate() const {
    if (!(timestep_s > 0.0)) throw std::invalid_argument("sim config: timestep must be positive");
    if (!(horizon_s >= 10.0 * timestep_s))
      throw std::invalid_argument("sim config: horizon must cover at least 10 timesteps");
    if (!(interaction_radius_m > 0.0))
      throw std::invalid_argument("sim config: interaction radius must be positive");
  }
};

struct VehicleState {
  double arc_position_m = 0.0;
  double speed_mps = 0.0;
  Vec2 position;
  double heading_rad = 0.0;
};

struct TraceStep {
  double time_s = 0.0;
  VehicleState ego;
  VehicleState adv;
  double separation_m = 0.0;
  double closing_speed_mps = 0.0;  // positive while approaching
};

enum class InvalidReason { no_interaction, degenerate_spawn_overlap };

inline const char* invalid_reason_name(InvalidReason r) {
  switch (r) {
    case InvalidReason::no_interaction: return "no_interaction";
    case InvalidReason::degenerate_spawn_overlap: return "degenerate_spawn_overlap";
  }
  return "";
}

struct SimulationOutcome {
  bool valid = false;
  std::optional<InvalidReason> invalid_reason;
  bool collision = false;
  // metrics are set only for valid outcomes; ttc_ms_cs may be +infinity
  std::optional<double> md_cm;
  std::optional<double> d_ms_cm;
  std::optional<double> ttc_ms_cs;
  std::vector<TraceStep> trace;
};

/// separation / closing speed, or +infinity when not approaching.
inline double compute_ttc(double separation_m, double closing_speed_mps) {
  if (closing_speed_mps > 0.0) return separation_m / closing_speed_mps;
  return std::numeric_limits<double>::infinity();
}

namespace detail {

inline VehicleState state_on_path(const PathDef& path, double s, double v) {
  VehicleState st;
  st.arc_position_m = s;
  st.speed_mps = v;
  st.position = path.point_at(s);
  st.heading_rad = path.heading_at(s);
  return st;
}

inline double separation(const VehicleState& a, const VehicleState& b) {
  return (a.position - b.position).norm();
}

/// Range rate: positive while the gap is shrinking.
inline double closing_speed(const VehicleState& ego, const VehicleState& adv) {
  const Vec2 dp = adv.position - ego.position;
  const double d = dp.norm();
  const Vec2 ve = Vec2{std::cos(ego.heading_rad), std::sin(ego.heading_rad)} * ego.speed_mps;
  const Vec2 va = Vec2{std::cos(adv.heading_rad), std::sin(adv.heading_rad)} * adv.speed_mps;
  const Vec2 dv = va - ve;
  if (d < 1e-12) return dv.norm();
  return -dp.dot(dv) / d;
}

}  // namespace detail

/// One control-and-advance step. The adversary holds its speed; the ego
/// brakes at ego_brake * kMaxBrakeDecelMps2 while the gap is inside
/// safety_dist and still closing, and otherwise commands its target speed.
inline std::pair<VehicleState, VehicleState> step(const std::pair<VehicleState, VehicleState>& states,
                                                  const Genome& genome, const PathPair& paths,
                                                  double dt) {
  const auto& [ego, adv] = states;
  const double sep = detail::separation(ego, adv);
  const double closing = detail::closing_speed(ego, adv);

  double ego_v = kmh_to_mps(genome.ego_speed_kmh);
  if (sep < genome.safety_dist_m && closing > 0.0)
    ego_v = std::max(0.0, ego.speed_mps - genome.ego_brake * kMaxBrakeDecelMps2 * dt);

  const double adv_v = kmh_to_mps(genome.adv_speed_kmh);
  VehicleState ego_next = detail::state_on_path(paths.ego, ego.arc_position_m + ego_v * dt, ego_v);
  VehicleState adv_next = detail::state_on_path(paths.adv, adv.arc_position_m + adv_v * dt, adv_v);
  return {ego_next, adv_next};
}

/// Validity rule over a finished trace: a scenario is invalid when the
/// vehicles spawn already overlapping or never get closer than the
/// interaction radius (the threshold itself counts as no interaction).
inline std::pair<bool, std::optional<InvalidReason>> classify_validity(
    const std::vector<TraceStep>& trace, const SimulationConfig& config, double crash_dist_m) {
  if (trace.empty()) return {false, InvalidReason::degenerate_spawn_overlap};
  if (trace.front().separation_m < crash_dist_m)
    return {false, InvalidReason::degenerate_spawn_overlap};
  double min_sep = std::numeric_limits<double>::infinity();
  for (const auto& s : trace) min_sep = std::min(min_sep, s.separation_m);
  if (min_sep >= config.interaction_radius_m) return {false, InvalidReason::no_interaction};
  return {true, std::nullopt};
}

/// Fixed-timestep run. Deterministic: identical inputs give identical traces.
inline SimulationOutcome run(const PathPair& paths, const Genome& genome,
                             const SimulationConfig& config) {
  config.validate();
  SimulationOutcome out;

  VehicleState ego = detail::state_on_path(
      paths.ego, paths.ego_conflict_s - genome.ego_init_dist_m, kmh_to_mps(genome.ego_speed_kmh));
  VehicleState adv = detail::state_on_path(
      paths.adv, paths.adv_conflict_s - genome.adv_init_dist_m, kmh_to_mps(genome.adv_speed_kmh));

  const double dt = config.timestep_s;
  const long steps = std::lround(config.horizon_s / dt);
  for (long k = 0; k <= steps; ++k) {
    TraceStep ts;
    ts.time_s = k * dt;
    ts.ego = ego;
    ts.adv = adv;
    ts.separation_m = detail::separation(ego, adv);
    ts.closing_speed_mps = detail::closing_speed(ego, adv);
    out.trace.push_back(ts);

    if (k == 0 && ts.separation_m < genome.crash_dist_m) break;  // spawn overlap
    if (ts.separation_m <= genome.crash_dist_m) {
      out.collision = true;
      break;
    }
    if (k == steps) break;
    std::tie(ego, adv) = step({ego, adv}, genome, paths, dt);
  }

  const auto [valid, reason] = classify_validity(out.trace, config, genome.crash_dist_m);
  out.valid = valid;
  out.invalid_reason = reason;
  if (!valid) {
    out.collision = false;
    return out;
  }

  double md = std::numeric_limits<double>::infinity();
  std::size_t ms_idx = 0;
  for (std::size_t i = 0; i < out.trace.size(); ++i) {
    md = std::min(md, out.trace[i].separation_m);
    if (out.trace[i].closing_speed_mps > out.trace[ms_idx].closing_speed_mps) ms_idx = i;  // earliest wins ties
  }
  out.md_cm = md * 100.0;
  out.d_ms_cm = out.trace[ms_idx].separation_m * 100.0;
  const double ttc_s =
      compute_ttc(out.trace[ms_idx].separation_m, out.trace[ms_idx].closing_speed_mps);
  out.ttc_ms_cs = ttc_s * 100.0;
  return out;
}

inline SimulationOutcome run(const ScenarioTemplate& t, const Genome& genome,
                             const SimulationConfig& config) {
  return run(build_paths(t), genome, config);
}

/// Per-step trace dump, 6-decimal fixed format.
inline void write_trace_csv(const SimulationOutcome& outcome, std::ostream& os) {
  os << "time_s,ego_x,ego_y,ego_v,adv_x,adv_y,adv_v,separation_m,closing_mps\n";
  char buf[256];
  for (const auto& s : outcome.trace) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", s.time_s,
                  s.ego.position.x, s.ego.position.y, s.ego.speed_mps, s.adv.position.x,
                  s.adv.position.y, s.adv.speed_mps, s.separation_m, s.closing_speed_mps);
    os << buf;
  }
}

}  // namespace ccsearch
