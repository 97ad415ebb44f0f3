#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "ccsearch/simulator.hpp"

namespace ccsearch {

/// Four ascending edges splitting [0, inf) into five bands scored 4..0.
/// Bands are lower-inclusive: values below edges[0] score 4, values at or
/// above edges[3] score 0.
struct BandEdges {
  std::array<double, 4> edges;

  bool operator==(const BandEdges&) const = default;

  void validate() const {
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      if (!(edges[i] < edges[i + 1]))
        throw std::invalid_argument("band edges must be strictly increasing");
    if (!(edges[0] > 0.0)) throw std::invalid_argument("band edges must be positive");
  }

  int score(double v) const {
    if (v < edges[0]) return 4;
    if (v < edges[1]) return 3;
    if (v < edges[2]) return 2;
    if (v < edges[3]) return 1;
    return 0;
  }
};

/// Risk band tables. Distances in centimeters, time-to-collision in
/// centiseconds.
struct BandTable {
  BandEdges md{{820.0, 1100.0, 1376.0, 1655.0}};
  BandEdges d_ms{{3780.0, 4020.0, 4255.0, 4490.0}};
  BandEdges ttc{{359.0, 394.0, 429.0, 464.0}};

  bool operator==(const BandTable&) const = default;

  void validate() const {
    md.validate();
    d_ms.validate();
    ttc.validate();
  }
};

inline constexpr int kCollisionScore = 10;
inline constexpr int kInvalidRiskScore = -1;
inline constexpr int kMaxRiskScore = 22;

inline int score_collision(bool collision) { return collision ? kCollisionScore : 0; }

inline int score_md(double md_cm, const BandEdges& bands = BandTable{}.md) {
  if (md_cm < 0.0) throw std::invalid_argument("score_md: negative distance");
  return bands.score(md_cm);
}

inline int score_d_ms(double d_ms_cm, const BandEdges& bands = BandTable{}.d_ms) {
  if (d_ms_cm < 0.0) throw std::invalid_argument("score_d_ms: negative distance");
  return bands.score(d_ms_cm);
}

/// +infinity (never approaching) scores 0.
inline int score_ttc_ms(double ttc_cs, const BandEdges& bands = BandTable{}.ttc) {
  if (std::isinf(ttc_cs)) return 0;
  if (ttc_cs < 0.0) throw std::invalid_argument("score_ttc_ms: negative time");
  return bands.score(ttc_cs);
}

/// Risk score of one simulation: -1 for invalid scenarios, otherwise the sum
/// of the four part scores in [0, 22]. Only a collision can push the total
/// past 12.
struct RiskScore {
  int total = 0;
  int c = 0;
  int md = 0;
  int d_ms = 0;
  int ttc_ms = 0;

  bool operator==(const RiskScore&) const = default;
  bool valid() const { return total >= 0; }
};

inline RiskScore risk_level(const SimulationOutcome& outcome, const BandTable& bands = {}) {
  RiskScore s;
  if (!outcome.valid) {
    s.total = kInvalidRiskScore;
    return s;
  }
  s.c = score_collision(outcome.collision);
  s.md = score_md(outcome.md_cm.value(), bands.md);
  s.d_ms = score_d_ms(outcome.d_ms_cm.value(), bands.d_ms);
  s.ttc_ms = score_ttc_ms(outcome.ttc_ms_cs.value(), bands.ttc);
  s.total = s.c + s.md + s.d_ms + s.ttc_ms;
  return s;
}

}  // namespace ccsearch
