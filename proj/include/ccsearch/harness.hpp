#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ccsearch/analysis.hpp"
#include "ccsearch/config.hpp"
#include "ccsearch/dsl.hpp"
#include "ccsearch/ga.hpp"
#include "ccsearch/version.hpp"

namespace ccsearch {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string fixed6(double v) {
  char buf[64];
  if (std::isinf(v)) return "inf";
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string opt_fixed6(const std::optional<double>& v) {
  return v ? fixed6(*v) : std::string();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Work-stealing batch evaluator; results land at their submission index, so
/// the output order is independent of the worker count.
inline BatchEvaluator make_parallel_evaluator(PathPair paths, SimulationConfig sim, int jobs) {
  if (jobs <= 1) return make_serial_evaluator(std::move(paths), sim);
  return [paths = std::move(paths), sim, jobs](const std::vector<Genome>& genomes) {
    std::vector<SimulationOutcome> out(genomes.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n = std::min<int>(jobs, static_cast<int>(genomes.size()));
    workers.reserve(n);
    for (int t = 0; t < n; ++t)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < genomes.size(); i = next.fetch_add(1))
          out[i] = run(paths, genomes[i], sim);
      });
    for (auto& w : workers) w.join();
    return out;
  };
}

/// One scenario ready to simulate: either a built-in template id or a
/// compiled script. Script declarations override the experiment config,
/// which overrides the built-in defaults.
struct ResolvedScenario {
  std::string name;       // directory-friendly unique name
  std::string spec;       // the id or path it came from
  ScenarioTemplate scenario;
  RangeArray ranges;
  SimulationConfig sim;
  std::optional<std::string> script_source;
};

inline ResolvedScenario resolve_scenario(const std::string& spec, const ExperimentConfig& cfg,
                                         const std::map<std::string, std::string>* scripts = nullptr) {
  ResolvedScenario out;
  out.spec = spec;
  if (spec.size() == 1) {
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(spec[0])));
    if (letter < 'A' || letter > 'F')
      throw std::invalid_argument("unknown scenario id '" + spec + "' (expected A..F or a script path)");
    out.name = std::string(1, letter);
    out.scenario = template_for(static_cast<ScenarioId>(letter - 'A'), cfg.geometry);
    out.ranges = validate_ranges(cfg.ranges);
    out.sim = cfg.sim;
    return out;
  }

  std::string source;
  if (scripts && scripts->count(spec)) {
    source = scripts->at(spec);
  } else {
    std::ifstream in(spec);
    if (!in) throw std::invalid_argument("cannot open scenario script: " + spec);
    std::ostringstream ss;
    ss << in.rdbuf();
    source = ss.str();
  }
  const auto parsed = dsl::parse(source);
  if (!parsed.ok()) {
    std::string msg = "scenario script " + spec + " has errors:";
    for (const auto& d : parsed.diagnostics)
      msg += "\n  " + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + d.message;
    throw std::invalid_argument(msg);
  }
  const auto compiled = dsl::compile(*parsed.ast, cfg.geometry);
  if (!compiled.ok()) {
    std::string msg = "scenario script " + spec + " does not compile:";
    for (const auto& d : compiled.diagnostics) msg += "\n  " + d.message;
    throw std::invalid_argument(msg);
  }
  out.name = std::filesystem::path(spec).stem().string();
  out.scenario = compiled.compiled->scenario;
  out.script_source = source;

  std::vector<ParameterRange> ranges = cfg.ranges;  // script params win over config
  for (const auto& p : parsed.ast->params)
    for (auto& r : ranges)
      if (r.name == p.name) r = {p.name, p.low, p.high, p.unit};
  out.ranges = validate_ranges(ranges);

  out.sim = cfg.sim;
  if (parsed.ast->sim.timestep_s) out.sim.timestep_s = *parsed.ast->sim.timestep_s;
  if (parsed.ast->sim.horizon_s) out.sim.horizon_s = *parsed.ast->sim.horizon_s;
  out.sim.validate();
  return out;
}

/// Seed of one (scenario, repetition, method) arm. method 0 is the GA,
/// method 1 the random baseline; the two streams are independent.
inline std::uint64_t arm_seed(std::uint64_t master, const std::string& scenario_name, int rep,
                              int method) {
  return SplitRng(master).split(detail::fnv1a(scenario_name)).split(rep).split(method).base_seed();
}

struct RunManifest {
  std::string run_id;
  std::string tool_version = kToolVersion;
  ExperimentConfig config;
  std::map<std::string, std::string> scripts;  // spec path -> source
  std::vector<std::string> scenario_names;
  long total_simulations = 0;
  std::vector<std::string> artifacts;  // paths relative to the run directory
  // wall-clock per generation, keyed scenario/rep_k/method; not part of the
  // reproducibility contract
  std::map<std::string, std::vector<double>> timings_ms;
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = {{"run_id", m.run_id},          {"tool_version", m.tool_version},
       {"config", m.config},          {"scripts", m.scripts},
       {"scenario_names", m.scenario_names}, {"total_simulations", m.total_simulations},
       {"artifacts", m.artifacts},    {"timings_ms", m.timings_ms}};
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("run_id").get_to(m.run_id);
  j.at("tool_version").get_to(m.tool_version);
  j.at("config").get_to(m.config);
  j.at("scripts").get_to(m.scripts);
  j.at("scenario_names").get_to(m.scenario_names);
  j.at("total_simulations").get_to(m.total_simulations);
  j.at("artifacts").get_to(m.artifacts);
  j.at("timings_ms").get_to(m.timings_ms);
}

inline constexpr const char* kSimsCsvHeader =
    "scenario,method,generation,individual,ego_init_dist,ego_speed,ego_brake,adv_init_dist,"
    "adv_speed,safety_dist,crash_dist,valid,invalid_reason,collision,md_cm,d_ms_cm,ttc_ms_cs,"
    "risk_total,risk_c,risk_md,risk_dms,risk_ttc";

inline constexpr const char* kStatsCsvHeader =
    "scenario,method,generation,rl_mean,nc,mdg_cm,mdec_cm,nis";

namespace detail {

inline void write_sims_rows(std::ostream& os, const std::string& scenario, const std::string& method,
                            const GaHistory& hist) {
  for (std::size_t g = 0; g < hist.generations.size(); ++g) {
    const auto& gen = hist.generations[g];
    for (std::size_t i = 0; i < gen.individuals.size(); ++i) {
      const auto& ind = gen.individuals[i];
      const auto& o = gen.outcomes[ind.outcome_ref];
      os << scenario << ',' << method << ',' << g << ',' << i;
      for (const double v : ind.genome.genes()) os << ',' << fixed6(v);
      os << ',' << (o.valid ? 1 : 0) << ','
         << (o.invalid_reason ? invalid_reason_name(*o.invalid_reason) : "") << ','
         << (o.collision ? 1 : 0) << ',' << opt_fixed6(o.md_cm) << ',' << opt_fixed6(o.d_ms_cm)
         << ',' << opt_fixed6(o.ttc_ms_cs) << ',' << ind.score.total << ',' << ind.score.c << ','
         << ind.score.md << ',' << ind.score.d_ms << ',' << ind.score.ttc_ms << '\n';
    }
  }
}

inline std::vector<GenerationStats> history_stats(const GaHistory& hist) {
  std::vector<GenerationStats> out;
  out.reserve(hist.generations.size());
  for (std::size_t g = 0; g < hist.generations.size(); ++g) {
    std::vector<RiskScore> scores;
    scores.reserve(hist.generations[g].individuals.size());
    for (const auto& ind : hist.generations[g].individuals) scores.push_back(ind.score);
    auto st = generation_stats(hist.generations[g].outcomes, scores);
    st.generation = static_cast<int>(g);
    out.push_back(std::move(st));
  }
  return out;
}

inline void write_stats_rows(std::ostream& os, const std::string& scenario, const std::string& method,
                             const std::vector<GenerationStats>& stats) {
  for (const auto& st : stats) {
    os << scenario << ',' << method << ',' << st.generation << ','
       << (st.rl_mean ? fixed6(*st.rl_mean) : "") << ',' << st.nc << ','
       << (st.mdg_mean_cm ? fixed6(*st.mdg_mean_cm) : "") << ','
       << (st.mdec_mean_cm ? fixed6(*st.mdec_mean_cm) : "") << ',' << st.nis << '\n';
  }
}

}  // namespace detail

/// Runs the full protocol: for every scenario and repetition, a GA search
/// plus (unless disabled) a budget-matched random baseline, each on its own
/// seed stream. Writes sims.csv and stats.csv per scenario/repetition and a
/// manifest.json that reproduces the run byte-for-byte.
inline RunManifest run_experiment(const ExperimentConfig& cfg,
                                  const std::map<std::string, std::string>* preloaded_scripts = nullptr) {
  namespace fs = std::filesystem;
  cfg.validate();

  std::vector<ResolvedScenario> resolved;
  for (const auto& spec : cfg.scenarios)
    resolved.push_back(resolve_scenario(spec, cfg, preloaded_scripts));
  for (std::size_t i = 0; i < resolved.size(); ++i)
    for (std::size_t j = i + 1; j < resolved.size(); ++j)
      if (resolved[i].name == resolved[j].name)
        throw std::invalid_argument("duplicate scenario name: " + resolved[i].name);

  RunManifest manifest;
  manifest.config = cfg;
  {
    // identity covers everything that shapes the data; location and worker
    // count do not, so replays keep the id
    ExperimentConfig identity = cfg;
    identity.output_dir.clear();
    identity.jobs = 1;
    const nlohmann::json cj = identity;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(cj.dump())));
    manifest.run_id = buf;
  }
  for (const auto& r : resolved) {
    manifest.scenario_names.push_back(r.name);
    if (r.script_source) manifest.scripts[r.spec] = *r.script_source;
  }

  const fs::path out_dir(cfg.output_dir);
  try {
    fs::create_directories(out_dir);
  } catch (const fs::filesystem_error& e) {
    throw std::invalid_argument("output directory not writable: " + out_dir.string() + ": " +
                                e.what());
  }

  const bool with_baseline = cfg.baseline == BaselineMode::random_matched;
  using clock = std::chrono::steady_clock;

  for (const auto& scen : resolved) {
    const PathPair paths = build_paths(scen.scenario);
    const BatchEvaluator base_eval = make_parallel_evaluator(paths, scen.sim, cfg.jobs);
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      char rep_name[16];
      std::snprintf(rep_name, sizeof rep_name, "rep_%02d", rep);
      const fs::path rep_dir = out_dir / scen.name / rep_name;
      try {
        fs::create_directories(rep_dir);
      } catch (const fs::filesystem_error& e) {
        throw std::invalid_argument("output directory not writable: " + rep_dir.string() + ": " +
                                    e.what());
      }

      std::ofstream sims(rep_dir / "sims.csv", std::ios::binary);
      std::ofstream stats(rep_dir / "stats.csv", std::ios::binary);
      if (!sims || !stats)
        throw std::runtime_error("cannot write into output directory: " + rep_dir.string());
      sims << kSimsCsvHeader << '\n';
      stats << kStatsCsvHeader << '\n';

      for (int method = 0; method < (with_baseline ? 2 : 1); ++method) {
        const std::string method_name = method == 0 ? "ga" : "random";
        GaConfig ga_cfg = cfg.ga;
        ga_cfg.seed = arm_seed(cfg.ga.seed, scen.name, rep, method);

        std::vector<double> gen_ms;
        gen_ms.reserve(ga_cfg.generations);
        const BatchEvaluator timed_eval = [&](const std::vector<Genome>& genomes) {
          const auto t0 = clock::now();
          auto out = base_eval(genomes);
          gen_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
          // per-step traces are not persisted by the harness; drop them so
          // histories stay small at full protocol scale
          for (auto& o : out) {
            o.trace.clear();
            o.trace.shrink_to_fit();
          }
          return out;
        };

        const GaHistory hist = method == 0
                                   ? run_ga(ga_cfg, scen.ranges, timed_eval, cfg.bands)
                                   : run_random_baseline(ga_cfg, scen.ranges, timed_eval, cfg.bands);
        detail::write_sims_rows(sims, scen.name, method_name, hist);
        detail::write_stats_rows(stats, scen.name, method_name, detail::history_stats(hist));
        manifest.timings_ms[scen.name + "/" + rep_name + "/" + method_name] = gen_ms;
        manifest.total_simulations +=
            static_cast<long>(ga_cfg.generations) * ga_cfg.population_size;
      }
      manifest.artifacts.push_back((fs::path(scen.name) / rep_name / "sims.csv").generic_string());
      manifest.artifacts.push_back((fs::path(scen.name) / rep_name / "stats.csv").generic_string());
    }
  }

  {
    nlohmann::json mj = manifest;
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    mf << mj.dump(2) << '\n';
  }
  return manifest;
}

inline RunManifest load_manifest(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) throw std::invalid_argument("missing manifest: " + (run_dir / "manifest.json").string());
  nlohmann::json j;
  try {
    in >> j;
    return j.get<RunManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("corrupt manifest in " + run_dir.string() + ": " + e.what());
  }
}

/// Re-executes a run exactly as recorded (script sources come from the
/// manifest, not from disk).
inline RunManifest rerun_from_manifest(const std::filesystem::path& manifest_dir,
                                       const std::string& output_dir) {
  RunManifest m = load_manifest(manifest_dir);
  ExperimentConfig cfg = m.config;
  cfg.output_dir = output_dir;
  return run_experiment(cfg, &m.scripts);
}

// Report building -------------------------------------------------------------

namespace detail {

inline std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

/// Reads stats.csv rows back, split per method.
inline void load_stats_csv(const std::filesystem::path& file,
                           std::vector<GenerationStats>& ga_out,
                           std::vector<GenerationStats>& random_out) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("missing stats file: " + file.string());
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 8) throw std::invalid_argument("malformed stats row in " + file.string());
    GenerationStats st;
    st.generation = std::stoi(cols[2]);
    st.rl_mean = parse_opt(cols[3]);
    st.nc = std::stoi(cols[4]);
    st.mdg_mean_cm = parse_opt(cols[5]);
    st.mdec_mean_cm = parse_opt(cols[6]);
    st.nis = std::stoi(cols[7]);
    (cols[1] == "ga" ? ga_out : random_out).push_back(std::move(st));
  }
}

}  // namespace detail

struct LoadedRun {
  RunManifest manifest;
  // scenario name -> (ga series, random series), one entry per repetition
  std::map<std::string, std::pair<RunSeries, RunSeries>> per_scenario;
};

inline LoadedRun load_run(const std::filesystem::path& run_dir) {
  LoadedRun lr;
  lr.manifest = load_manifest(run_dir);
  for (const auto& name : lr.manifest.scenario_names) {
    auto& [ga, random] = lr.per_scenario[name];
    for (int rep = 0; rep < lr.manifest.config.repetitions; ++rep) {
      char rep_name[16];
      std::snprintf(rep_name, sizeof rep_name, "rep_%02d", rep);
      std::vector<GenerationStats> g, r;
      detail::load_stats_csv(run_dir / name / rep_name / "stats.csv", g, r);
      ga.reps.push_back(std::move(g));
      if (lr.manifest.config.baseline == BaselineMode::random_matched)
        random.reps.push_back(std::move(r));
    }
  }
  return lr;
}

/// Merges one or more runs (repetitions concatenate) into the comparison
/// report: per-scenario metric tables plus the all-scenario consolidation.
inline ComparisonReport build_report(const std::vector<LoadedRun>& runs, int sg_window = 7,
                                     int sg_order = 2) {
  if (runs.empty()) throw std::invalid_argument("build_report: no runs");
  for (const auto& r : runs) {
    if (r.manifest.scenario_names != runs.front().manifest.scenario_names)
      throw std::invalid_argument("build_report: runs cover different scenarios");
    if (r.manifest.config.ga.generations != runs.front().manifest.config.ga.generations)
      throw std::invalid_argument("build_report: runs have different generation counts");
    if (r.manifest.config.baseline == BaselineMode::none)
      throw std::invalid_argument("build_report: run has no baseline to compare against");
  }

  ComparisonReport report;
  report.tool_version = kToolVersion;
  report.sg_window = sg_window;
  report.sg_order = sg_order;
  report.generations = runs.front().manifest.config.ga.generations;

  RunSeries all_ga, all_random;
  for (const auto& name : runs.front().manifest.scenario_names) {
    RunSeries ga, random;
    for (const auto& r : runs) {
      const auto& [g, rd] = r.per_scenario.at(name);
      ga.reps.insert(ga.reps.end(), g.reps.begin(), g.reps.end());
      random.reps.insert(random.reps.end(), rd.reps.begin(), rd.reps.end());
    }
    report.scenarios.push_back(compare_runs(name, ga, random, sg_window, sg_order));
    all_ga.reps.insert(all_ga.reps.end(), ga.reps.begin(), ga.reps.end());
    all_random.reps.insert(all_random.reps.end(), random.reps.begin(), random.reps.end());
    report.repetitions = static_cast<int>(ga.reps.size());
  }
  report.consolidated = compare_runs("all", all_ga, all_random, sg_window, sg_order);
  return report;
}

/// Writes comparison.json plus plot-ready trend CSVs (raw and smoothed).
inline void write_report(const ComparisonReport& report, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    nlohmann::json j = report;
    std::ofstream os(out_dir / "comparison.json", std::ios::binary);
    os << j.dump(2) << '\n';
  }
  const auto write_trends = [&](const fs::path& file, bool smoothed) {
    std::ofstream os(file, std::ios::binary);
    os << "scenario,metric,generation,ga,random\n";
    const auto emit = [&](const ScenarioComparison& sc) {
      for (const auto& [metric, mc] : sc.metrics) {
        const auto& ga = smoothed ? mc.ga_trend_smoothed : mc.ga_trend_raw;
        const auto& rd = smoothed ? mc.random_trend_smoothed : mc.random_trend_raw;
        for (std::size_t g = 0; g < ga.size(); ++g)
          os << sc.scenario << ',' << metric << ',' << g << ',' << detail::fixed6(ga[g]) << ','
             << detail::fixed6(rd[g]) << '\n';
      }
    };
    for (const auto& sc : report.scenarios) emit(sc);
    emit(report.consolidated);
  };
  write_trends(out_dir / "trends_raw.csv", false);
  write_trends(out_dir / "trends_smoothed.csv", true);
}

}  // namespace ccsearch
