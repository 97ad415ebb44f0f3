#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccsearch/fitness.hpp"
#include "ccsearch/simulator.hpp"

namespace ccsearch {

// ---------------------------------------------------------------------------
// Per-generation aggregates
// ---------------------------------------------------------------------------

/// Aggregates of one generation: mean risk level over valid runs, collision
/// and invalid counts, and mean minimum distances over all valid runs (mdg)
/// and over valid non-collision runs (mdec).
struct GenerationStats {
  int generation = 0;
  std::optional<double> rl_mean;
  std::vector<int> rl_values;  // raw scores including -1 sentinels
  int nc = 0;
  std::optional<double> mdg_mean_cm;
  std::optional<double> mdec_mean_cm;
  int nis = 0;
};

inline GenerationStats generation_stats(const std::vector<SimulationOutcome>& outcomes,
                                        const std::vector<RiskScore>& scores) {
  if (outcomes.size() != scores.size() || outcomes.empty())
    throw std::invalid_argument("generation_stats: outcome/score shape mismatch");
  GenerationStats st;
  double rl_sum = 0.0, mdg_sum = 0.0, mdec_sum = 0.0;
  int n_valid = 0, n_mdec = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    st.rl_values.push_back(scores[i].total);
    if (!outcomes[i].valid) {
      ++st.nis;
      continue;
    }
    ++n_valid;
    rl_sum += scores[i].total;
    mdg_sum += outcomes[i].md_cm.value();
    if (outcomes[i].collision) {
      ++st.nc;
    } else {
      mdec_sum += outcomes[i].md_cm.value();
      ++n_mdec;
    }
  }
  if (n_valid > 0) {
    st.rl_mean = rl_sum / n_valid;
    st.mdg_mean_cm = mdg_sum / n_valid;
  }
  if (n_mdec > 0) st.mdec_mean_cm = mdec_sum / n_mdec;
  return st;
}

// ---------------------------------------------------------------------------
// Savitzky-Golay smoothing
// ---------------------------------------------------------------------------

namespace detail {

/// Gaussian elimination with partial pivoting; small systems only.
inline std::vector<long double> solve_linear(std::vector<std::vector<long double>> m,
                                             std::vector<long double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    if (m[col][col] == 0.0L) throw std::runtime_error("solve_linear: singular system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<long double> x(n, 0.0L);
  for (std::size_t i = n; i-- > 0;) {
    long double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m[i][c] * x[c];
    x[i] = acc / m[i][i];
  }
  return x;
}

/// Least-squares polynomial fit over (x_j, y_j) via normal equations;
/// returns the coefficients, lowest order first.
inline std::vector<long double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                                        int order) {
  const std::size_t terms = order + 1;
  std::vector<std::vector<long double>> m(terms, std::vector<long double>(terms, 0.0L));
  std::vector<long double> rhs(terms, 0.0L);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    long double xp = 1.0L;
    std::vector<long double> powers(2 * terms - 1);
    for (std::size_t p = 0; p < powers.size(); ++p) {
      powers[p] = xp;
      xp *= xs[j];
    }
    for (std::size_t p = 0; p < terms; ++p) {
      rhs[p] += powers[p] * static_cast<long double>(ys[j]);
      for (std::size_t q = 0; q < terms; ++q) m[p][q] += powers[p + q];
    }
  }
  return solve_linear(std::move(m), std::move(rhs));
}

inline double polyval(const std::vector<long double>& coeffs, double x) {
  long double acc = 0.0L;
  for (std::size_t p = coeffs.size(); p-- > 0;) acc = acc * x + coeffs[p];
  return static_cast<double>(acc);
}

}  // namespace detail

/// Savitzky-Golay filter: each output is the center value of a least-squares
/// polynomial fit over the surrounding window; the first and last half
/// windows are filled by evaluating the first/last full-window fit at the
/// off-center positions.
inline std::vector<double> savitzky_golay(const std::vector<double>& series, int window, int order) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("savitzky_golay: window must be odd");
  if (order < 1 || order >= window)
    throw std::invalid_argument("savitzky_golay: order must satisfy 1 <= order < window");
  if (series.size() < static_cast<std::size_t>(window))
    throw std::invalid_argument("savitzky_golay: series shorter than window");

  const int h = window / 2;
  const std::size_t n = series.size();
  std::vector<double> xs(window);
  for (int j = 0; j < window; ++j) xs[j] = j - h;  // centered abscissa

  std::vector<double> out(n);
  std::vector<double> ys(window);
  for (std::size_t i = h; i + h < n; ++i) {
    for (int j = 0; j < window; ++j) ys[j] = series[i - h + j];
    out[i] = detail::polyval(detail::polyfit(xs, ys, order), 0.0);
  }
  // edges: polynomial extrapolation of the first/last full window
  for (int j = 0; j < window; ++j) ys[j] = series[j];
  const auto first_fit = detail::polyfit(xs, ys, order);
  for (int i = 0; i < h; ++i) out[i] = detail::polyval(first_fit, i - h);
  for (int j = 0; j < window; ++j) ys[j] = series[n - window + j];
  const auto last_fit = detail::polyfit(xs, ys, order);
  for (int i = 0; i < h; ++i) out[n - 1 - i] = detail::polyval(last_fit, h - i);
  return out;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

enum class Stars { ns, one, two, three };

inline const char* stars_label(Stars s) {
  switch (s) {
    case Stars::ns: return "ns";
    case Stars::one: return "*";
    case Stars::two: return "**";
    case Stars::three: return "***";
  }
  return "ns";
}

inline Stars stars_for_p(double p) {
  if (p <= 0.001) return Stars::three;
  if (p <= 0.01) return Stars::two;
  if (p <= 0.05) return Stars::one;
  return Stars::ns;
}

struct SignificanceResult {
  double statistic = 0.0;  // U of the first sample
  double p_value = 1.0;
  Stars stars = Stars::ns;
};

namespace detail {

/// Number of arrangements with U = u for sample sizes (m, n): coefficients
/// of the Gaussian binomial [m+n, m]_q, built as the iterated product
/// prod_{i=1..m} (1 - q^{n+i}) / (1 - q^i). Index u runs over 0..m*n
/// (coefficients above m*n are zero after the full product).
inline std::vector<long double> u_count_distribution(int m, int n) {
  const int top = m * n + m + 1;  // slack for intermediate degrees
  std::vector<long double> ways(top, 0.0L);
  ways[0] = 1.0L;
  for (int i = 1; i <= m; ++i) {
    for (int u = top - 1; u >= n + i; --u) ways[u] -= ways[u - (n + i)];
    for (int u = i; u < top; ++u) ways[u] += ways[u - i];
  }
  ways.resize(m * n + 1);
  return ways;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// Two-sided Mann-Whitney U. Uses the exact null distribution when
/// min(|a|,|b|) <= 8 and there are no ties, and the tie-corrected normal
/// approximation (with continuity correction) otherwise. The two-sided
/// p-value is the doubled lower tail of min(U1, U2), capped at 1.
inline SignificanceResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const int n1 = static_cast<int>(a.size());
  const int n2 = static_cast<int>(b.size());
  const int n = n1 + n2;

  std::vector<std::pair<double, int>> pooled;  // (value, 0 for a / 1 for b)
  pooled.reserve(n);
  for (double v : a) pooled.push_back({v, 0});
  for (double v : b) pooled.push_back({v, 1});
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  // midranks and tie bookkeeping
  std::vector<double> ranks(n);
  bool has_ties = false;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double rank = (i + j) / 2.0 + 1.0;
    for (int k = i; k <= j; ++k) ranks[k] = rank;
    const int t = j - i + 1;
    if (t > 1) {
      has_ties = true;
      tie_term += static_cast<double>(t) * t * t - t;
    }
    i = j + 1;
  }

  double r1 = 0.0;
  for (int k = 0; k < n; ++k)
    if (pooled[k].second == 0) r1 += ranks[k];
  const double u1 = r1 - n1 * (n1 + 1) / 2.0;
  const double u2 = static_cast<double>(n1) * n2 - u1;
  const double u_min = std::min(u1, u2);

  SignificanceResult res;
  res.statistic = u1;

  if (std::min(n1, n2) <= 8 && !has_ties) {
    const auto counts = detail::u_count_distribution(n1, n2);
    long double total = 0.0L, tail = 0.0L;
    for (std::size_t u = 0; u < counts.size(); ++u) {
      total += counts[u];
      if (u <= static_cast<std::size_t>(std::llround(u_min))) tail += counts[u];
    }
    res.p_value = std::min(1.0, 2.0 * static_cast<double>(tail / total));
  } else {
    const double mu = static_cast<double>(n1) * n2 / 2.0;
    const double var =
        (static_cast<double>(n1) * n2 / 12.0) *
        ((n + 1) - tie_term / (static_cast<double>(n) * (n - 1)));
    if (var <= 0.0) {
      res.p_value = 1.0;
    } else {
      const double z = (std::abs(u1 - mu) - 0.5) / std::sqrt(var);
      res.p_value = std::min(1.0, 2.0 * detail::normal_sf(std::max(0.0, z)));
    }
  }
  res.stars = stars_for_p(res.p_value);
  return res;
}

// ---------------------------------------------------------------------------
// Run comparison
// ---------------------------------------------------------------------------

/// Stats of one method on one scenario: one GenerationStats list per
/// repetition, all with the same generation count.
struct RunSeries {
  std::vector<std::vector<GenerationStats>> reps;
};

struct MetricComparison {
  double ga_overall_mean = 0.0;
  double random_overall_mean = 0.0;
  double ga_final_third_mean = 0.0;
  double random_final_third_mean = 0.0;
  double relative_delta_overall = 0.0;
  double relative_delta_final_third = 0.0;
  double u_statistic = 0.0;
  double p_value = 1.0;
  std::string stars = "ns";
  std::vector<double> ga_trend_raw;
  std::vector<double> random_trend_raw;
  std::vector<double> ga_trend_smoothed;
  std::vector<double> random_trend_smoothed;

  bool operator==(const MetricComparison&) const = default;
};

struct ScenarioComparison {
  std::string scenario;
  std::map<std::string, MetricComparison> metrics;

  bool operator==(const ScenarioComparison&) const = default;
};

struct ComparisonReport {
  std::string tool_version;
  std::string significance_test = "mann_whitney_u_two_sided";
  std::string significance_samples = "per_generation_means_pooled_across_repetitions";
  int sg_window = 7;
  int sg_order = 2;
  int generations = 0;
  int repetitions = 0;
  std::vector<ScenarioComparison> scenarios;
  ScenarioComparison consolidated;

  bool operator==(const ComparisonReport&) const = default;
};

inline const std::vector<std::string>& comparison_metric_names() {
  static const std::vector<std::string> names = {"rl", "nc", "mdg", "mdec", "nis"};
  return names;
}

namespace detail {

inline double metric_value(const GenerationStats& g, const std::string& metric) {
  if (metric == "rl") return g.rl_mean ? *g.rl_mean : std::nan("");
  if (metric == "nc") return g.nc;
  if (metric == "mdg") return g.mdg_mean_cm ? *g.mdg_mean_cm : std::nan("");
  if (metric == "mdec") return g.mdec_mean_cm ? *g.mdec_mean_cm : std::nan("");
  if (metric == "nis") return g.nis;
  throw std::invalid_argument("unknown metric: " + metric);
}

inline double mean_ignoring_nan(const std::vector<double>& v) {
  double sum = 0.0;
  int n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      sum += x;
      ++n;
    }
  return n > 0 ? sum / n : std::nan("");
}

/// Per-generation mean across repetitions.
inline std::vector<double> trend_across_reps(const RunSeries& series, const std::string& metric) {
  const std::size_t gens = series.reps.front().size();
  std::vector<double> trend(gens);
  for (std::size_t g = 0; g < gens; ++g) {
    std::vector<double> vals;
    for (const auto& rep : series.reps) vals.push_back(metric_value(rep[g], metric));
    trend[g] = mean_ignoring_nan(vals);
  }
  return trend;
}

/// All per-(repetition, generation) values, restricted to [first, last).
inline std::vector<double> pooled_values(const RunSeries& series, const std::string& metric,
                                         std::size_t first, std::size_t last) {
  std::vector<double> out;
  for (const auto& rep : series.reps)
    for (std::size_t g = first; g < last && g < rep.size(); ++g) {
      const double v = metric_value(rep[g], metric);
      if (!std::isnan(v)) out.push_back(v);
    }
  return out;
}

inline std::vector<double> smooth_or_copy(const std::vector<double>& trend, int window, int order) {
  if (trend.size() < static_cast<std::size_t>(window)) return trend;
  for (double v : trend)
    if (std::isnan(v)) return trend;
  return savitzky_golay(trend, window, order);
}

inline double relative_delta(double ga, double random) {
  if (std::isnan(ga) || std::isnan(random)) return std::nan("");
  if (random == 0.0) return ga == 0.0 ? 0.0 : std::nan("");
  return (ga - random) / random;
}

inline MetricComparison compare_metric(const RunSeries& ga, const RunSeries& random,
                                       const std::string& metric, int sg_window, int sg_order) {
  MetricComparison mc;
  const std::size_t gens = ga.reps.front().size();
  const std::size_t final_first = gens - gens / 3;  // final third (last floor(gens/3))

  const auto ga_all = pooled_values(ga, metric, 0, gens);
  const auto rd_all = pooled_values(random, metric, 0, gens);
  const auto ga_final = pooled_values(ga, metric, final_first, gens);
  const auto rd_final = pooled_values(random, metric, final_first, gens);

  mc.ga_overall_mean = mean_ignoring_nan(ga_all);
  mc.random_overall_mean = mean_ignoring_nan(rd_all);
  mc.ga_final_third_mean = mean_ignoring_nan(ga_final);
  mc.random_final_third_mean = mean_ignoring_nan(rd_final);
  mc.relative_delta_overall = relative_delta(mc.ga_overall_mean, mc.random_overall_mean);
  mc.relative_delta_final_third = relative_delta(mc.ga_final_third_mean, mc.random_final_third_mean);

  if (!ga_all.empty() && !rd_all.empty()) {
    const auto sig = mann_whitney_u(ga_all, rd_all);
    mc.u_statistic = sig.statistic;
    mc.p_value = sig.p_value;
    mc.stars = stars_label(sig.stars);
  }

  mc.ga_trend_raw = trend_across_reps(ga, metric);
  mc.random_trend_raw = trend_across_reps(random, metric);
  mc.ga_trend_smoothed = smooth_or_copy(mc.ga_trend_raw, sg_window, sg_order);
  mc.random_trend_smoothed = smooth_or_copy(mc.random_trend_raw, sg_window, sg_order);
  return mc;
}

inline void check_series_shape(const RunSeries& s) {
  if (s.reps.empty()) throw std::invalid_argument("compare_runs: empty series");
  for (const auto& rep : s.reps)
    if (rep.size() != s.reps.front().size())
      throw std::invalid_argument("compare_runs: repetition generation counts differ");
}

}  // namespace detail

/// Per-scenario comparison of a GA run against its matched random baseline.
inline ScenarioComparison compare_runs(const std::string& scenario, const RunSeries& ga,
                                       const RunSeries& random, int sg_window = 7, int sg_order = 2) {
  detail::check_series_shape(ga);
  detail::check_series_shape(random);
  if (ga.reps.front().size() != random.reps.front().size())
    throw std::invalid_argument("compare_runs: generation counts differ between methods");
  ScenarioComparison sc;
  sc.scenario = scenario;
  for (const auto& metric : comparison_metric_names())
    sc.metrics[metric] = detail::compare_metric(ga, random, metric, sg_window, sg_order);
  return sc;
}

// JSON serialization ---------------------------------------------------------

namespace detail {

inline nlohmann::json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double num_from(const nlohmann::json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const MetricComparison& m) {
  j = nlohmann::json{{"ga_overall_mean", detail::num_or_null(m.ga_overall_mean)},
                     {"random_overall_mean", detail::num_or_null(m.random_overall_mean)},
                     {"ga_final_third_mean", detail::num_or_null(m.ga_final_third_mean)},
                     {"random_final_third_mean", detail::num_or_null(m.random_final_third_mean)},
                     {"relative_delta_overall", detail::num_or_null(m.relative_delta_overall)},
                     {"relative_delta_final_third", detail::num_or_null(m.relative_delta_final_third)},
                     {"u_statistic", m.u_statistic},
                     {"p_value", m.p_value},
                     {"stars", m.stars},
                     {"ga_trend_raw", m.ga_trend_raw},
                     {"random_trend_raw", m.random_trend_raw},
                     {"ga_trend_smoothed", m.ga_trend_smoothed},
                     {"random_trend_smoothed", m.random_trend_smoothed}};
}

inline void from_json(const nlohmann::json& j, MetricComparison& m) {
  m.ga_overall_mean = detail::num_from(j.at("ga_overall_mean"));
  m.random_overall_mean = detail::num_from(j.at("random_overall_mean"));
  m.ga_final_third_mean = detail::num_from(j.at("ga_final_third_mean"));
  m.random_final_third_mean = detail::num_from(j.at("random_final_third_mean"));
  m.relative_delta_overall = detail::num_from(j.at("relative_delta_overall"));
  m.relative_delta_final_third = detail::num_from(j.at("relative_delta_final_third"));
  j.at("u_statistic").get_to(m.u_statistic);
  j.at("p_value").get_to(m.p_value);
  j.at("stars").get_to(m.stars);
  j.at("ga_trend_raw").get_to(m.ga_trend_raw);
  j.at("random_trend_raw").get_to(m.random_trend_raw);
  j.at("ga_trend_smoothed").get_to(m.ga_trend_smoothed);
  j.at("random_trend_smoothed").get_to(m.random_trend_smoothed);
}

inline void to_json(nlohmann::json& j, const ScenarioComparison& s) {
  j = nlohmann::json{{"scenario", s.scenario}, {"metrics", s.metrics}};
}

inline void from_json(const nlohmann::json& j, ScenarioComparison& s) {
  j.at("scenario").get_to(s.scenario);
  j.at("metrics").get_to(s.metrics);
}

inline void to_json(nlohmann::json& j, const ComparisonReport& r) {
  j = nlohmann::json{{"tool_version", r.tool_version},
                     {"significance_test", r.significance_test},
                     {"significance_samples", r.significance_samples},
                     {"sg_window", r.sg_window},
                     {"sg_order", r.sg_order},
                     {"generations", r.generations},
                     {"repetitions", r.repetitions},
                     {"scenarios", r.scenarios},
                     {"consolidated", r.consolidated}};
}

inline void from_json(const nlohmann::json& j, ComparisonReport& r) {
  j.at("tool_version").get_to(r.tool_version);
  j.at("significance_test").get_to(r.significance_test);
  j.at("significance_samples").get_to(r.significance_samples);
  j.at("sg_window").get_to(r.sg_window);
  j.at("sg_order").get_to(r.sg_order);
  j.at("generations").get_to(r.generations);
  j.at("repetitions").get_to(r.repetitions);
  j.at("scenarios").get_to(r.scenarios);
  j.at("consolidated").get_to(r.consolidated);
}

}  // namespace ccsearch
