#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>
#include "json.hpp"

#include "ccsearch/fitness.hpp"
#include "ccsearch/ga.hpp"
#include "ccsearch/scenario.hpp"
#include "ccsearch/simulator.hpp"

namespace ccsearch {

enum class BaselineMode { random_matched, none };

/// Everything a run needs. Defaults are compiled in; a YAML config file and
/// CLI flags overlay them.
struct ExperimentConfig {
  std::vector<std::string> scenarios = {"A", "B", "C", "D", "E", "F"};  // ids or .ccs paths
  int repetitions = 1;
  BaselineMode baseline = BaselineMode::random_matched;
  std::string output_dir = "runs/latest";
  int jobs = 1;
  GaConfig ga;
  SimulationConfig sim;
  IntersectionLayout geometry;
  std::vector<ParameterRange> ranges = default_ranges();
  BandTable bands;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (scenarios.empty()) throw std::invalid_argument("config: no scenarios selected");
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
    if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
    ga.validate();
    sim.validate();
    geometry.validate();
    validate_ranges(ranges);
    bands.validate();
  }
};

namespace detail {

inline void require_keys(const YAML::Node& node, const std::string& section,
                         const std::vector<std::string>& known) {
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (const auto& k : known) ok |= (k == key);
    if (!ok) throw std::invalid_argument("config: unknown key '" + section + key + "'");
  }
}

inline void load_band(const YAML::Node& node, BandEdges& edges) {
  const auto vals = node.as<std::vector<double>>();
  if (vals.size() != 4) throw std::invalid_argument("config: band tables need exactly 4 edges");
  std::copy(vals.begin(), vals.end(), edges.edges.begin());
}

}  // namespace detail

/// Overlays a parsed YAML document onto `cfg`. Unknown keys are errors.
inline void apply_yaml(ExperimentConfig& cfg, const YAML::Node& root) {
  if (!root.IsDefined() || root.IsNull()) return;
  detail::require_keys(root, "", {"experiment", "ga", "sim", "geometry", "ranges", "fitness_bands"});

  if (const auto exp = root["experiment"]) {
    detail::require_keys(exp, "experiment.",
                         {"scenarios", "repetitions", "baseline", "output_dir", "jobs"});
    if (exp["scenarios"]) cfg.scenarios = exp["scenarios"].as<std::vector<std::string>>();
    if (exp["repetitions"]) cfg.repetitions = exp["repetitions"].as<int>();
    if (exp["baseline"]) {
      const auto b = exp["baseline"].as<std::string>();
      if (b == "random_matched") cfg.baseline = BaselineMode::random_matched;
      else if (b == "none") cfg.baseline = BaselineMode::none;
      else throw std::invalid_argument("config: unknown baseline '" + b + "'");
    }
    if (exp["output_dir"]) cfg.output_dir = exp["output_dir"].as<std::string>();
    if (exp["jobs"]) cfg.jobs = exp["jobs"].as<int>();
  }
  if (const auto ga = root["ga"]) {
    detail::require_keys(ga, "ga.",
                         {"mu_s", "mu_c", "mu_m", "population", "generations", "seed", "tournament"});
    if (ga["mu_s"]) cfg.ga.mu_s = ga["mu_s"].as<double>();
    if (ga["mu_c"]) cfg.ga.mu_c = ga["mu_c"].as<double>();
    if (ga["mu_m"]) cfg.ga.mu_m = ga["mu_m"].as<double>();
    if (ga["population"]) cfg.ga.population_size = ga["population"].as<int>();
    if (ga["generations"]) cfg.ga.generations = ga["generations"].as<int>();
    if (ga["seed"]) cfg.ga.seed = ga["seed"].as<std::uint64_t>();
    if (ga["tournament"]) cfg.ga.tournament_size = ga["tournament"].as<int>();
  }
  if (const auto sim = root["sim"]) {
    detail::require_keys(sim, "sim.", {"timestep", "horizon", "interaction_radius"});
    if (sim["timestep"]) cfg.sim.timestep_s = sim["timestep"].as<double>();
    if (sim["horizon"]) cfg.sim.horizon_s = sim["horizon"].as<double>();
    if (sim["interaction_radius"]) cfg.sim.interaction_radius_m = sim["interaction_radius"].as<double>();
  }
  if (const auto geo = root["geometry"]) {
    detail::require_keys(geo, "geometry.",
                         {"lane_width", "arm_length", "turn_radius_left", "turn_radius_right"});
    if (geo["lane_width"]) cfg.geometry.lane_width_m = geo["lane_width"].as<double>();
    if (geo["arm_length"]) cfg.geometry.arm_length_m = geo["arm_length"].as<double>();
    if (geo["turn_radius_left"]) cfg.geometry.turn_radius_left_m = geo["turn_radius_left"].as<double>();
    if (geo["turn_radius_right"]) cfg.geometry.turn_radius_right_m = geo["turn_radius_right"].as<double>();
  }
  if (const auto ranges = root["ranges"]) {
    for (const auto& kv : ranges) {
      const std::string name = kv.first.as<std::string>();
      bool found = false;
      for (auto& r : cfg.ranges) {
        if (r.name != name) continue;
        const auto vals = kv.second.as<std::vector<double>>();
        if (vals.size() != 2) throw std::invalid_argument("config: range '" + name + "' needs [low, high]");
        r.low = vals[0];
        r.high = vals[1];
        found = true;
      }
      if (!found) throw std::invalid_argument("config: unknown parameter range '" + name + "'");
    }
  }
  if (const auto bands = root["fitness_bands"]) {
    detail::require_keys(bands, "fitness_bands.", {"md", "d_ms", "ttc"});
    if (bands["md"]) detail::load_band(bands["md"], cfg.bands.md);
    if (bands["d_ms"]) detail::load_band(bands["d_ms"], cfg.bands.d_ms);
    if (bands["ttc"]) detail::load_band(bands["ttc"], cfg.bands.ttc);
  }
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument("config: cannot load " + path.string() + ": " + e.what());
  }
  apply_yaml(cfg, root);
  return cfg;
}

// JSON serialization (used by run manifests) ---------------------------------

inline void to_json(nlohmann::json& j, const ParameterRange& r) {
  j = {{"name", r.name}, {"low", r.low}, {"high", r.high}, {"unit", std::string(unit_name(r.unit))}};
}

inline void from_json(const nlohmann::json& j, ParameterRange& r) {
  j.at("name").get_to(r.name);
  j.at("low").get_to(r.low);
  j.at("high").get_to(r.high);
  const auto u = j.at("unit").get<std::string>();
  r.unit = u == "kmh" ? Unit::km_per_h : u == "m" ? Unit::meters : Unit::dimensionless;
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"scenarios", c.scenarios},
       {"repetitions", c.repetitions},
       {"baseline", c.baseline == BaselineMode::random_matched ? "random_matched" : "none"},
       {"output_dir", c.output_dir},
       {"jobs", c.jobs},
       {"ga",
        {{"mu_s", c.ga.mu_s},
         {"mu_c", c.ga.mu_c},
         {"mu_m", c.ga.mu_m},
         {"population", c.ga.population_size},
         {"generations", c.ga.generations},
         {"seed", c.ga.seed},
         {"tournament", c.ga.tournament_size}}},
       {"sim",
        {{"timestep", c.sim.timestep_s},
         {"horizon", c.sim.horizon_s},
         {"interaction_radius", c.sim.interaction_radius_m}}},
       {"geometry",
        {{"lane_width", c.geometry.lane_width_m},
         {"arm_length", c.geometry.arm_length_m},
         {"turn_radius_left", c.geometry.turn_radius_left_m},
         {"turn_radius_right", c.geometry.turn_radius_right_m}}},
       {"ranges", c.ranges},
       {"fitness_bands",
        {{"md", c.bands.md.edges}, {"d_ms", c.bands.d_ms.edges}, {"ttc", c.bands.ttc.edges}}}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("scenarios").get_to(c.scenarios);
  j.at("repetitions").get_to(c.repetitions);
  c.baseline = j.at("baseline").get<std::string>() == "none" ? BaselineMode::none
                                                             : BaselineMode::random_matched;
  j.at("output_dir").get_to(c.output_dir);
  j.at("jobs").get_to(c.jobs);
  const auto& ga = j.at("ga");
  ga.at("mu_s").get_to(c.ga.mu_s);
  ga.at("mu_c").get_to(c.ga.mu_c);
  ga.at("mu_m").get_to(c.ga.mu_m);
  ga.at("population").get_to(c.ga.population_size);
  ga.at("generations").get_to(c.ga.generations);
  ga.at("seed").get_to(c.ga.seed);
  ga.at("tournament").get_to(c.ga.tournament_size);
  const auto& sim = j.at("sim");
  sim.at("timestep").get_to(c.sim.timestep_s);
  sim.at("horizon").get_to(c.sim.horizon_s);
  sim.at("interaction_radius").get_to(c.sim.interaction_radius_m);
  const auto& geo = j.at("geometry");
  geo.at("lane_width").get_to(c.geometry.lane_width_m);
  geo.at("arm_length").get_to(c.geometry.arm_length_m);
  geo.at("turn_radius_left").get_to(c.geometry.turn_radius_left_m);
  geo.at("turn_radius_right").get_to(c.geometry.turn_radius_right_m);
  j.at("ranges").get_to(c.ranges);
  const auto& b = j.at("fitness_bands");
  b.at("md").get_to(c.bands.md.edges);
  b.at("d_ms").get_to(c.bands.d_ms.edges);
  b.at("ttc").get_to(c.bands.ttc.edges);
}

}  // namespace ccsearch
