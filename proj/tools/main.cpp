// Command-line harness: `run` executes the GA + matched random-baseline
// protocol, `report` aggregates finished runs into comparison tables, and
// `validate` type-checks a scenario script.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccsearch/config.hpp"
#include "ccsearch/dsl.hpp"
#include "ccsearch/harness.hpp"
#include "ccsearch/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct RunOptions {
  std::string config_path;
  std::string from_manifest;
  std::vector<std::string> scenarios;
  std::optional<std::uint64_t> seed;
  std::optional<int> generations;
  std::optional<int> population;
  std::optional<int> repetitions;
  std::optional<int> jobs;
  std::string out_dir;
  std::string baseline;
  bool dump_traces = false;
};

int cmd_run(const RunOptions& opt) {
  ccsearch::ExperimentConfig cfg;
  std::map<std::string, std::string> scripts;
  const std::map<std::string, std::string>* scripts_ptr = nullptr;

  if (!opt.from_manifest.empty()) {
    const auto manifest = ccsearch::load_manifest(opt.from_manifest);
    cfg = manifest.config;
    scripts = manifest.scripts;
    scripts_ptr = &scripts;
  } else if (!opt.config_path.empty()) {
    cfg = ccsearch::load_config_file(opt.config_path);
  }

  if (!opt.scenarios.empty()) cfg.scenarios = opt.scenarios;
  if (opt.seed) cfg.ga.seed = *opt.seed;
  if (opt.generations) cfg.ga.generations = *opt.generations;
  if (opt.population) cfg.ga.population_size = *opt.population;
  if (opt.repetitions) cfg.repetitions = *opt.repetitions;
  if (opt.jobs) cfg.jobs = *opt.jobs;
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (!opt.baseline.empty()) {
    if (opt.baseline == "random_matched") cfg.baseline = ccsearch::BaselineMode::random_matched;
    else if (opt.baseline == "none") cfg.baseline = ccsearch::BaselineMode::none;
    else throw std::invalid_argument("unknown baseline mode: " + opt.baseline);
  }

  const auto manifest = ccsearch::run_experiment(cfg, scripts_ptr);

  if (opt.dump_traces) {
    // Re-simulate per the manifest and dump per-step traces; opt-in because
    // a full run produces one file per simulation.
    namespace fs = std::filesystem;
    for (const auto& spec : cfg.scenarios) {
      const auto scen = ccsearch::resolve_scenario(spec, cfg, scripts_ptr);
      const auto paths = ccsearch::build_paths(scen.scenario);
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        char rep_name[16];
        std::snprintf(rep_name, sizeof rep_name, "rep_%02d", rep);
        const int methods = cfg.baseline == ccsearch::BaselineMode::random_matched ? 2 : 1;
        for (int method = 0; method < methods; ++method) {
          ccsearch::GaConfig ga_cfg = cfg.ga;
          ga_cfg.seed = ccsearch::arm_seed(cfg.ga.seed, scen.name, rep, method);
          const auto eval = ccsearch::make_parallel_evaluator(paths, scen.sim, cfg.jobs);
          const auto hist = method == 0
                                ? ccsearch::run_ga(ga_cfg, scen.ranges, eval, cfg.bands)
                                : ccsearch::run_random_baseline(ga_cfg, scen.ranges, eval, cfg.bands);
          const fs::path dir = fs::path(cfg.output_dir) / scen.name / rep_name / "traces";
          fs::create_directories(dir);
          for (std::size_t g = 0; g < hist.generations.size(); ++g)
            for (std::size_t i = 0; i < hist.generations[g].outcomes.size(); ++i) {
              char name[64];
              std::snprintf(name, sizeof name, "%s_g%03zu_i%03zu.csv",
                            method == 0 ? "ga" : "random", g, i);
              std::ofstream os(dir / name, std::ios::binary);
              ccsearch::write_trace_csv(hist.generations[g].outcomes[i], os);
            }
        }
      }
    }
  }

  std::cout << "run " << manifest.run_id << ": " << manifest.total_simulations
            << " simulations across " << manifest.scenario_names.size() << " scenario(s) -> "
            << cfg.output_dir << "\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir, int sg_window,
               int sg_order) {
  std::vector<ccsearch::LoadedRun> runs;
  for (const auto& dir : run_dirs) runs.push_back(ccsearch::load_run(dir));
  const auto report = ccsearch::build_report(runs, sg_window, sg_order);
  ccsearch::write_report(report, out_dir);

  for (const auto& sc : report.scenarios) {
    const auto& rl = sc.metrics.at("rl");
    std::cout << sc.scenario << ": RL ga=" << rl.ga_overall_mean
              << " random=" << rl.random_overall_mean << " (" << rl.stars << ")\n";
  }
  const auto& rl = report.consolidated.metrics.at("rl");
  std::cout << "all: RL ga=" << rl.ga_overall_mean << " random=" << rl.random_overall_mean
            << " delta=" << rl.relative_delta_overall * 100.0 << "% (" << rl.stars << ")\n";
  std::cout << "report -> " << out_dir << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& script_path) {
  std::ifstream in(script_path);
  if (!in) {
    std::cerr << script_path << ": cannot open file\n";
    return kExitUsage;
  }
  std::ostringstream ss;
  ss << in.rdbuf();

  const auto parsed = ccsearch::dsl::parse(ss.str());
  const auto print = [&](const ccsearch::dsl::ParseDiagnostic& d) {
    std::cerr << script_path << ':' << d.line << ':' << d.column << ": "
              << (d.severity == ccsearch::dsl::ParseDiagnostic::Severity::error ? "error" : "warning")
              << ": " << d.message << "\n";
  };
  for (const auto& d : parsed.diagnostics) print(d);
  if (!parsed.ok()) return kExitUsage;

  const auto compiled = ccsearch::dsl::compile(*parsed.ast);
  for (const auto& d : compiled.diagnostics) print(d);
  if (!compiled.ok()) return kExitUsage;

  std::cout << script_path << ": ok (scenario "
            << ccsearch::scenario_letter(compiled.compiled->scenario.id) << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search-based corner-case scenario generation for two-vehicle intersections"};
  app.set_version_flag("--version", std::string(ccsearch::kToolVersion));
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run GA and matched random baseline");
  run->add_option("--config", run_opt.config_path, "YAML experiment config")
      ->envname("CCSEARCH_CONFIG");
  run->add_option("--from-manifest", run_opt.from_manifest,
                  "Reproduce a previous run from its directory's manifest.json");
  run->add_option("--scenario", run_opt.scenarios, "Scenario id (A..F) or .ccs script; repeatable")
      ->envname("CCSEARCH_SCENARIO");
  run->add_option("--seed", run_opt.seed, "Master seed")->envname("CCSEARCH_SEED");
  run->add_option("--generations", run_opt.generations, "Generations per run")
      ->envname("CCSEARCH_GENERATIONS");
  run->add_option("--population", run_opt.population, "Individuals per generation")
      ->envname("CCSEARCH_POPULATION");
  run->add_option("--repetitions", run_opt.repetitions, "Repetitions per scenario")
      ->envname("CCSEARCH_REPETITIONS");
  run->add_option("--jobs", run_opt.jobs, "Parallel evaluation workers")->envname("CCSEARCH_JOBS");
  run->add_option("--out", run_opt.out_dir, "Output directory")->envname("CCSEARCH_OUT");
  run->add_option("--baseline", run_opt.baseline, "random_matched or none");
  run->add_flag("--traces", run_opt.dump_traces, "Also dump per-simulation trace CSVs");

  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  int sg_window = 7, sg_order = 2;
  auto* report = app.add_subcommand("report", "Build comparison report from finished runs");
  report->add_option("run_dirs", report_dirs, "Run directories (with manifest.json)")->required();
  report->add_option("--out", report_out, "Report output directory")->envname("CCSEARCH_REPORT_OUT");
  report->add_option("--sg-window", sg_window, "Savitzky-Golay window (odd)");
  report->add_option("--sg-order", sg_order, "Savitzky-Golay polynomial order");

  std::string script_path;
  auto* validate = app.add_subcommand("validate", "Parse and compile a scenario script");
  validate->add_option("script", script_path, "Path to a .ccs scenario script")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (report->parsed()) return cmd_report(report_dirs, report_out, sg_window, sg_order);
    if (validate->parsed()) return cmd_validate(script_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
