#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ccsearch/geometry.hpp"
#include "ccsearch/rng.hpp"

namespace ccsearch {

enum class Unit { km_per_h, meters, dimensionless };

inline std::string_view unit_name(Unit u) {
  switch (u) {
    case Unit::km_per_h: return "kmh";
    case Unit::meters: return "m";
    case Unit::dimensionless: return "";
  }
  return "";
}

/// Hard cap substituted for the open-ended initial-distance ranges.
inline constexpr double kInitDistCapM = 150.0;

/// Continuous range of one scenario parameter.
struct ParameterRange {
  std::string name;
  double low = 0.0;
  double high = 0.0;
  Unit unit = Unit::dimensionless;

  bool operator==(const ParameterRange&) const = default;

  void validate() const {
    if (!(low <= high)) throw std::invalid_argument("range '" + name + "': low exceeds high");
    if (!std::isfinite(low) || !std::isfinite(high))
      throw std::invalid_argument("range '" + name + "': bounds must be finite");
  }
};

/// The seven-value scenario parameter vector. Gene order matches the
/// canonical encoding <EGO_INIT_DIST, EGO_SPEED, EGO_BRAKE, ADV_INIT_DIST,
/// ADV_SPEED, SAFETY_DIST, CRASH_DIST>.
struct Genome {
  double ego_init_dist_m = 0.0;
  double ego_speed_kmh = 0.0;
  double ego_brake = 0.0;
  double adv_init_dist_m = 0.0;
  double adv_speed_kmh = 0.0;
  double safety_dist_m = 0.0;
  double crash_dist_m = 0.0;

  static constexpr std::size_t kGeneCount = 7;

  bool operator==(const Genome&) const = default;

  std::array<double, kGeneCount> genes() const {
    return {ego_init_dist_m, ego_speed_kmh, ego_brake,
            adv_init_dist_m, adv_speed_kmh, safety_dist_m, crash_dist_m};
  }

  static Genome from_genes(const std::array<double, kGeneCount>& g) {
    return {g[0], g[1], g[2], g[3], g[4], g[5], g[6]};
  }

  double gene(std::size_t i) const { return genes()[i]; }

  void set_gene(std::size_t i, double v) {
    auto g = genes();
    g.at(i) = v;
    *this = from_genes(g);
  }
};

inline constexpr std::array<std::string_view, Genome::kGeneCount> kParameterNames = {
    "EGO_INIT_DIST", "EGO_SPEED", "EGO_BRAKE", "ADV_INIT_DIST",
    "ADV_SPEED",     "SAFETY_DIST", "CRASH_DIST"};

/// Default ranges: speeds in [5, 80] km/h, brake gain in [0, 1],
/// safety distance in [0, 20] m, crash distance in [0, 5] m and initial
/// distances capped at kInitDistCapM.
inline std::vector<ParameterRange> default_ranges() {
  return {
      {"EGO_INIT_DIST", 0.0, kInitDistCapM, Unit::meters},
      {"EGO_SPEED", 5.0, 80.0, Unit::km_per_h},
      {"EGO_BRAKE", 0.0, 1.0, Unit::dimensionless},
      {"ADV_INIT_DIST", 0.0, kInitDistCapM, Unit::meters},
      {"ADV_SPEED", 5.0, 80.0, Unit::km_per_h},
      {"SAFETY_DIST", 0.0, 20.0, Unit::meters},
      {"CRASH_DIST", 0.0, 5.0, Unit::meters},
  };
}

/// Ranges indexed by gene position.
using RangeArray = std::array<ParameterRange, Genome::kGeneCount>;

/// Checks that `ranges` names each of the seven parameters exactly once and
/// returns them in gene order. Throws std::invalid_argument otherwise.
inline RangeArray validate_ranges(const std::vector<ParameterRange>& ranges) {
  RangeArray out;
  std::array<bool, Genome::kGeneCount> seen{};
  for (const auto& r : ranges) {
    bool known = false;
    for (std::size_t i = 0; i < kParameterNames.size(); ++i) {
      if (r.name == kParameterNames[i]) {
        if (seen[i]) throw std::invalid_argument("duplicate parameter range: " + r.name);
        r.validate();
        seen[i] = true;
        out[i] = r;
        known = true;
        break;
      }
    }
    if (!known) throw std::invalid_argument("unknown parameter range: " + r.name);
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw std::invalid_argument("missing parameter range: " + std::string(kParameterNames[i]));
  return out;
}

/// Each gene drawn independently and uniformly from its range.
inline Genome sample_random_genome(const RangeArray& ranges, SplitRng& rng) {
  std::array<double, Genome::kGeneCount> g;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(ranges[i].low, ranges[i].high);
  return Genome::from_genes(g);
}

inline Genome sample_random_genome(const std::vector<ParameterRange>& ranges, SplitRng& rng) {
  const RangeArray ordered = validate_ranges(ranges);
  return sample_random_genome(ordered, rng);
}

/// Projects each gene onto [low, high]. Idempotent.
inline Genome clamp_genome(const Genome& g, const RangeArray& ranges) {
  auto genes = g.genes();
  for (std::size_t i = 0; i < genes.size(); ++i)
    genes[i] = std::clamp(genes[i], ranges[i].low, ranges[i].high);
  return Genome::from_genes(genes);
}

inline Genome clamp_genome(const Genome& g, const std::vector<ParameterRange>& ranges) {
  return clamp_genome(g, validate_ranges(ranges));
}

// ---------------------------------------------------------------------------
// Intersection templates
// ---------------------------------------------------------------------------

enum class ScenarioId { A, B, C, D, E, F, custom };
enum class LaneLayout { two_by_two, three_lane };
enum class ManeuverKind { cross_straight, left_turn, right_turn };
enum class ApproachKind { same_road_opposite, perpendicular };

inline char scenario_letter(ScenarioId id) {
  switch (id) {
    case ScenarioId::A: return 'A';
    case ScenarioId::B: return 'B';
    case ScenarioId::C: return 'C';
    case ScenarioId::D: return 'D';
    case ScenarioId::E: return 'E';
    case ScenarioId::F: return 'F';
    case ScenarioId::custom: return '?';
  }
  return '?';
}

struct IntersectionLayout {
  double lane_width_m = 3.5;
  double arm_length_m = 160.0;
  double turn_radius_left_m = 10.5;
  double turn_radius_right_m = 6.0;
  Vec2 conflict_zone_center;  // filled in during template construction

  bool operator==(const IntersectionLayout&) const = default;

  void validate() const {
    if (lane_width_m <= 0.0 || arm_length_m <= 0.0 || turn_radius_left_m <= 0.0 ||
        turn_radius_right_m <= 0.0)
      throw std::invalid_argument("intersection layout: lengths must be positive");
    if (!(turn_radius_right_m < turn_radius_left_m))
      throw std::invalid_argument("intersection layout: right turn radius must be smaller than left");
  }
};

struct ScenarioTemplate {
  ScenarioId id = ScenarioId::A;
  LaneLayout lane_layout = LaneLayout::two_by_two;
  ManeuverKind ego_maneuver = ManeuverKind::cross_straight;
  ManeuverKind adv_maneuver = ManeuverKind::cross_straight;
  ApproachKind adv_approach = ApproachKind::same_road_opposite;
  IntersectionLayout geometry;

  bool operator==(const ScenarioTemplate&) const = default;
};

/// Both routes of a scenario with the conflict anchors used for spawning:
/// a vehicle with initial distance d starts d meters (along its route)
/// before its route's closest point to the conflict-zone center.
struct PathPair {
  PathDef ego;
  PathDef adv;
  double ego_conflict_s = 0.0;
  double adv_conflict_s = 0.0;
  Vec2 conflict_point;
  double conflict_distance = 0.0;
};

namespace detail {

// Lanes are straight two-way roads through the origin: the east-west road
// along x and the north-south road along y, right-hand traffic. A lane is
// its centerline anchor (closest point to the origin) plus direction.
struct Lane {
  Vec2 anchor;
  Vec2 dir;
};

struct RoadLanes {
  Lane east;   // eastbound
  Lane west;   // westbound
  Lane north;  // northbound (rightmost when the road has several)
  Lane south;  // southbound
  Lane north_inner;  // inner northbound lane (three-lane road only)
};

inline RoadLanes make_lanes(LaneLayout layout, double lw) {
  RoadLanes l;
  const double h = lw / 2.0;
  l.east = {{0.0, -h}, {1.0, 0.0}};
  l.west = {{0.0, +h}, {-1.0, 0.0}};
  if (layout == LaneLayout::two_by_two) {
    l.north = {{+h, 0.0}, {0.0, 1.0}};
    l.north_inner = l.north;
    l.south = {{-h, 0.0}, {0.0, -1.0}};
  } else {
    // three-lane north-south road: southbound at -lw, northbound at 0 and +lw
    l.north = {{+lw, 0.0}, {0.0, 1.0}};
    l.north_inner = {{0.0, 0.0}, {0.0, 1.0}};
    l.south = {{-lw, 0.0}, {0.0, -1.0}};
  }
  return l;
}

/// Straight route along a lane, `arm` meters on both sides of the anchor.
inline PathDef straight_route(const Lane& lane, double arm) {
  return PathDef({PathPiece::line(lane.anchor - lane.dir * arm, lane.anchor + lane.dir * arm)});
}

/// Approach along `in`, a tangent arc onto `out`, then an exit run.
/// Left turns sweep counterclockwise, right turns clockwise.
inline PathDef turn_route(const Lane& in, const Lane& out, double radius, bool left_turn,
                          double arm) {
  const double sign = left_turn ? 1.0 : -1.0;
  const Vec2 n1 = in.dir.left();
  const Vec2 n2 = out.dir.left();
  // center c solves n1.c = n1.a1 + sign*r, n2.c = n2.a2 + sign*r
  const double b1 = n1.dot(in.anchor) + sign * radius;
  const double b2 = n2.dot(out.anchor) + sign * radius;
  const double det = n1.x * n2.y - n1.y * n2.x;
  if (std::abs(det) < 1e-9) throw std::invalid_argument("turn_route: lanes are parallel");
  const Vec2 c{(b1 * n2.y - b2 * n1.y) / det, (n1.x * b2 - n2.x * b1) / det};
  const Vec2 t1 = c - n1 * (sign * radius);
  const Vec2 t2 = c - n2 * (sign * radius);
  const double th1 = std::atan2((t1 - c).y, (t1 - c).x);
  const double th2 = std::atan2((t2 - c).y, (t2 - c).x);
  const double sweep = left_turn ? wrap_two_pi(th2 - th1) : -wrap_two_pi(th1 - th2);
  return PathDef({
      PathPiece::line(t1 - in.dir * arm, t1),
      PathPiece::arc(c, radius, th1, sweep),
      PathPiece::line(t2, t2 + out.dir * arm),
  });
}

struct RoutePlacement {
  Lane in;
  ManeuverKind maneuver;
  Lane out;  // ignored for cross_straight
};

inline PathDef build_route(const RoutePlacement& p, const IntersectionLayout& g) {
  if (p.maneuver == ManeuverKind::cross_straight) return straight_route(p.in, g.arm_length_m);
  const bool left = p.maneuver == ManeuverKind::left_turn;
  const double r = left ? g.turn_radius_left_m : g.turn_radius_right_m;
  return turn_route(p.in, p.out, r, left, g.arm_length_m);
}

/// Placement of both vehicles for a maneuver combination. The ego is placed
/// on the east-west road heading east except for the perpendicular cases
/// where its maneuver (or the three-lane layout) puts the conflict on the
/// crossing road; the adversary is placed so the routes genuinely conflict.
inline std::pair<RoutePlacement, RoutePlacement> place_routes(ManeuverKind ego_man,
                                                              ManeuverKind adv_man,
                                                              ApproachKind approach,
                                                              LaneLayout layout,
                                                              const RoadLanes& l) {
  RoutePlacement ego, adv;
  const bool ego_on_ns = approach == ApproachKind::perpendicular &&
                         (ego_man == ManeuverKind::right_turn || layout == LaneLayout::three_lane);
  if (ego_on_ns) {
    ego.in = l.north;
    ego.maneuver = ego_man;
    if (ego_man == ManeuverKind::left_turn) ego.out = l.west;
    if (ego_man == ManeuverKind::right_turn) ego.out = l.east;
  } else {
    ego.in = l.east;
    ego.maneuver = ego_man;
    if (ego_man == ManeuverKind::left_turn)
      ego.out = layout == LaneLayout::three_lane ? l.north_inner : l.north;
    if (ego_man == ManeuverKind::right_turn) ego.out = l.south;
  }

  adv.maneuver = adv_man;
  if (approach == ApproachKind::same_road_opposite) {
    adv.in = l.west;
    if (adv_man == ManeuverKind::left_turn) adv.out = l.south;
    if (adv_man == ManeuverKind::right_turn) adv.out = l.north;
  } else if (!ego_on_ns) {
    // adversary on the north-south road
    switch (adv_man) {
      case ManeuverKind::cross_straight: adv.in = l.south; break;
      case ManeuverKind::left_turn: adv.in = l.north; adv.out = l.west; break;
      case ManeuverKind::right_turn: adv.in = l.north; adv.out = l.east; break;
    }
  } else {
    // ego on the north-south road; adversary crosses or turns into its lane
    switch (adv_man) {
      case ManeuverKind::cross_straight: adv.in = l.east; break;
      case ManeuverKind::left_turn: adv.in = l.east; adv.out = ego.in; break;
      case ManeuverKind::right_turn: adv.in = l.west; adv.out = ego.in; break;
    }
  }
  return {ego, adv};
}

inline std::pair<PathDef, PathDef> build_route_pair(ManeuverKind ego_man, ManeuverKind adv_man,
                                                    ApproachKind approach, LaneLayout layout,
                                                    const IntersectionLayout& g) {
  const RoadLanes lanes = make_lanes(layout, g.lane_width_m);
  const auto [ego_p, adv_p] = place_routes(ego_man, adv_man, approach, layout, lanes);
  return {build_route(ego_p, g), build_route(adv_p, g)};
}

}  // namespace detail

/// Builds a template from its row description. The conflict-zone center is
/// the midpoint of the routes' closest approach (first contact for merging
/// routes), so initial distances are measured to the actual conflict.
inline ScenarioTemplate make_template(ScenarioId id, LaneLayout layout, ManeuverKind ego_man,
                                      ManeuverKind adv_man, ApproachKind approach,
                                      const IntersectionLayout& base = {}) {
  base.validate();
  ScenarioTemplate t;
  t.id = id;
  t.lane_layout = layout;
  t.ego_maneuver = ego_man;
  t.adv_maneuver = adv_man;
  t.adv_approach = approach;
  t.geometry = base;
  auto [ego_path, adv_path] = detail::build_route_pair(ego_man, adv_man, approach, layout, base);
  t.geometry.conflict_zone_center = closest_approach(ego_path, adv_path).midpoint;
  return t;
}

/// The six intersection conflict templates:
///   A: ego crosses; oncoming adversary turns left across it.
///   B: ego turns left; perpendicular adversary crosses its arc.
///   C: ego crosses; perpendicular adversary turns left across it.
///   D: ego turns right; oncoming adversary turns left into the same exit.
///   E: ego turns right into the lane a perpendicular adversary crosses on.
///   F: as B on a three-lane crossing road.
inline ScenarioTemplate template_for(ScenarioId id, const IntersectionLayout& base = {}) {
  using M = ManeuverKind;
  using A = ApproachKind;
  using L = LaneLayout;
  switch (id) {
    case ScenarioId::A:
      return make_template(id, L::two_by_two, M::cross_straight, M::left_turn, A::same_road_opposite, base);
    case ScenarioId::B:
      return make_template(id, L::two_by_two, M::left_turn, M::cross_straight, A::perpendicular, base);
    case ScenarioId::C:
      return make_template(id, L::two_by_two, M::cross_straight, M::left_turn, A::perpendicular, base);
    case ScenarioId::D:
      return make_template(id, L::two_by_two, M::right_turn, M::left_turn, A::same_road_opposite, base);
    case ScenarioId::E:
      return make_template(id, L::two_by_two, M::right_turn, M::cross_straight, A::perpendicular, base);
    case ScenarioId::F:
      return make_template(id, L::three_lane, M::left_turn, M::cross_straight, A::perpendicular, base);
    default:
      throw std::invalid_argument("template_for: unknown scenario id");
  }
}

/// Realizes the template's maneuvers as concrete routes with conflict anchors.
inline PathPair build_paths(const ScenarioTemplate& t) {
  auto [ego_path, adv_path] = detail::build_route_pair(t.ego_maneuver, t.adv_maneuver,
                                                       t.adv_approach, t.lane_layout, t.geometry);
  PathPair p;
  const PathConflict c = closest_approach(ego_path, adv_path);
  p.ego = std::move(ego_path);
  p.adv = std::move(adv_path);
  p.ego_conflict_s = c.s_a;
  p.adv_conflict_s = c.s_b;
  p.conflict_point = c.midpoint;
  p.conflict_distance = c.distance;
  return p;
}

}  // namespace ccsearch
