#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ccsearch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Vec2& o) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
  }
  /// 90-degree counterclockwise rotation.
  Vec2 left() const { return {-y, x}; }
};

inline double wrap_two_pi(double a) {
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  a = std::fmod(a, two_pi);
  return a < 0.0 ? a + two_pi : a;
}

/// One piece of a route: a line segment or a circular arc, both
/// arc-length parameterized.
struct PathPiece {
  enum class Kind { line, arc };
  Kind kind;
  // line
  Vec2 a, b;
  // arc: point(t) = center + r * (cos(theta0 + t*sweep), sin(theta0 + t*sweep))
  Vec2 center;
  double radius = 0.0;
  double theta0 = 0.0;
  double sweep = 0.0;  // signed; + is counterclockwise
  double length = 0.0;

  static PathPiece line(Vec2 a, Vec2 b) {
    PathPiece p;
    p.kind = Kind::line;
    p.a = a;
    p.b = b;
    p.length = (b - a).norm();
    return p;
  }
  static PathPiece arc(Vec2 center, double radius, double theta0, double sweep) {
    PathPiece p;
    p.kind = Kind::arc;
    p.center = center;
    p.radius = radius;
    p.theta0 = theta0;
    p.sweep = sweep;
    p.length = std::abs(sweep) * radius;
    return p;
  }

  Vec2 point_at(double t) const {
    if (kind == Kind::line) return a + (b - a) * t;
    const double th = theta0 + t * sweep;
    return center + Vec2{std::cos(th), std::sin(th)} * radius;
  }

  Vec2 tangent_at(double t) const {
    if (kind == Kind::line) return (b - a).normalized();
    const double th = theta0 + t * sweep;
    Vec2 radial{std::cos(th), std::sin(th)};
    return sweep >= 0.0 ? radial.left() : radial.left() * -1.0;
  }

  /// Closest point to `p` restricted to the piece; returns (t, distance).
  std::pair<double, double> project(const Vec2& p) const {
    if (kind == Kind::line) {
      const Vec2 d = b - a;
      const double len2 = d.dot(d);
      double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
      return {t, (p - point_at(t)).norm()};
    }
    const Vec2 rel = p - center;
    if (rel.norm() < 1e-12) {
      // center of the arc: every arc point is equally close; take the start
      return {0.0, radius};
    }
    const double phi = std::atan2(rel.y, rel.x);
    const double offset = sweep >= 0.0 ? wrap_two_pi(phi - theta0) : wrap_two_pi(theta0 - phi);
    const double span = std::abs(sweep);
    if (offset <= span) {
      const double t = span > 0.0 ? offset / span : 0.0;
      return {t, std::abs(rel.norm() - radius)};
    }
    const double d0 = (p - point_at(0.0)).norm();
    const double d1 = (p - point_at(1.0)).norm();
    return d0 <= d1 ? std::pair{0.0, d0} : std::pair{1.0, d1};
  }
};

/// Piecewise continuous route, parameterized by arc length. Queries outside
/// [0, total_length] extrapolate along the first/last heading, so vehicles
/// can be anchored before the route start or overrun its end.
class PathDef {
 public:
  PathDef() = default;
  explicit PathDef(std::vector<PathPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("PathDef: no pieces");
    cum_.resize(pieces_.size() + 1, 0.0);
    for (std::size_t i = 0; i < pieces_.size(); ++i) cum_[i + 1] = cum_[i] + pieces_[i].length;
  }

  double total_length() const { return cum_.back(); }
  const std::vector<PathPiece>& pieces() const { return pieces_; }

  Vec2 point_at(double s) const {
    if (s < 0.0) return pieces_.front().point_at(0.0) + tangent_at(0.0) * s;
    if (s > total_length())
      return pieces_.back().point_at(1.0) + tangent_at(total_length()) * (s - total_length());
    const auto [idx, t] = locate(s);
    return pieces_[idx].point_at(t);
  }

  Vec2 tangent_at(double s) const {
    const double sc = std::clamp(s, 0.0, total_length());
    const auto [idx, t] = locate(sc);
    return pieces_[idx].tangent_at(t);
  }

  double heading_at(double s) const {
    const Vec2 t = tangent_at(s);
    return std::atan2(t.y, t.x);
  }

  /// Exact distance from `p` to the route (no extrapolation).
  double distance_to(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces_) best = std::min(best, piece.project(p).second);
    return best;
  }

  /// Arc coordinate of the point on the route closest to `p`.
  /// Ties broken toward the smallest coordinate.
  double project(const Vec2& p) const {
    double best_d = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto [t, d] = pieces_[i].project(p);
      const double s = cum_[i] + t * pieces_[i].length;
      if (d < best_d - 1e-12 || (d < best_d + 1e-12 && s < best_s)) {
        best_d = d;
        best_s = s;
      }
    }
    return best_s;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    std::size_t idx = 0;
    while (idx + 1 < pieces_.size() && s > cum_[idx + 1]) ++idx;
    const double len = pieces_[idx].length;
    const double t = len > 0.0 ? (s - cum_[idx]) / len : 0.0;
    return {idx, std::clamp(t, 0.0, 1.0)};
  }

  std::vector<PathPiece> pieces_;
  std::vector<double> cum_;
};

/// Closest approach between two routes.
struct PathConflict {
  double s_a = 0.0;       // arc coordinate on path a
  double s_b = 0.0;       // arc coordinate on path b
  Vec2 midpoint;          // midpoint of the closest pair
  double distance = 0.0;  // minimum mutual distance
};

/// Finds the closest approach of `a` to `b`, preferring the earliest
/// coordinate along `a` when the minimum is attained on a whole stretch
/// (merging routes). Coarse scan plus local refinement; deterministic.
inline PathConflict closest_approach(const PathDef& a, const PathDef& b) {
  constexpr double kCoarse = 0.05;       // m
  constexpr double kTouch = 1e-6;        // below this the routes touch
  constexpr double kTieEps = 1e-9;

  const double len = a.total_length();
  double best_d = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  const int n = static_cast<int>(std::ceil(len / kCoarse));
  for (int i = 0; i <= n; ++i) {
    const double s = std::min(len, i * kCoarse);
    const double d = b.distance_to(a.point_at(s));
    if (d < best_d - kTieEps) {
      best_d = d;
      best_s = s;
    }
  }

  const auto dist = [&](double s) { return b.distance_to(a.point_at(s)); };
  if (best_d <= kTouch) {
    // first contact: earliest s where the routes touch
    double a1 = best_s;
    while (a1 > 0.0 && dist(std::max(0.0, a1 - kCoarse)) <= kTouch) a1 = std::max(0.0, a1 - kCoarse);
    double a0 = std::max(0.0, a1 - kCoarse);
    if (dist(a0) > kTouch) {
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (a0 + a1);
        (dist(mid) <= kTouch ? a1 : a0) = mid;
      }
    }
    best_s = a1;
    best_d = dist(best_s);
  } else {
    double lo = std::max(0.0, best_s - kCoarse);
    double hi = std::min(len, best_s + kCoarse);
    for (int i = 0; i < 80; ++i) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (dist(m1) <= dist(m2)) hi = m2; else lo = m1;
    }
    best_s = 0.5 * (lo + hi);
    best_d = dist(best_s);
  }

  PathConflict c;
  c.s_a = best_s;
  const Vec2 pa = a.point_at(best_s);
  c.s_b = b.project(pa);
  const Vec2 pb = b.point_at(c.s_b);
  c.midpoint = (pa + pb) * 0.5;
  c.distance = best_d;
  return c;
}

}  // namespace ccsearch
