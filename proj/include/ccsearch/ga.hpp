#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ccsearch/fitness.hpp"
#include "ccsearch/scenario.hpp"

namespace ccsearch {

struct GaConfig {
  double mu_s = 0.1;  // elitism
  double mu_c = 0.8;  // crossover
  double mu_m = 0.1;  // mutation
  int population_size = 100;
  int generations = 30;
  std::uint64_t seed = 1;
  // crossover parents and mutation subjects are drawn by tournament over the
  // valid individuals; size 1 means uniform choice, leaving elitism as the
  // only exploitation mechanism
  int tournament_size = 1;

  bool operator==(const GaConfig&) const = default;

  void validate() const {
    if (mu_s < 0.0 || mu_c < 0.0 || mu_m < 0.0)
      throw std::invalid_argument("ga config: operator probabilities must be non-negative");
    if (std::abs(mu_s + mu_c + mu_m - 1.0) > 1e-12)
      throw std::invalid_argument("ga config: operator probabilities must sum to 1");
    if (population_size < 1) throw std::invalid_argument("ga config: population size must be positive");
    if (generations < 1) throw std::invalid_argument("ga config: generations must be positive");
    if (tournament_size < 1) throw std::invalid_argument("ga config: tournament size must be positive");
  }
};

enum class GaOperator { elitism, crossover, mutation };

/// Maps a uniform draw to an operator. Intervals follow [0, mu_s] for
/// elitism, ]mu_s, mu_s+mu_c[ for crossover and [mu_s+mu_c, 1] for mutation;
/// the shared endpoint at mu_s resolves to elitism.
inline GaOperator select_operator(double u, const GaConfig& cfg) {
  if (u <= cfg.mu_s) return GaOperator::elitism;
  if (u < cfg.mu_s + cfg.mu_c) return GaOperator::crossover;
  return GaOperator::mutation;
}

struct EvaluatedIndividual {
  Genome genome;
  RiskScore score;
  std::size_t outcome_ref = 0;  // index into the generation's outcome list

  bool operator==(const EvaluatedIndividual&) const = default;
};

/// Index of the best valid individual not yet chosen; ties broken by lower
/// index. Returns nullopt when the pool is exhausted, otherwise records the
/// pick in `already_chosen`.
inline std::optional<std::size_t> elitism_pick(const std::vector<EvaluatedIndividual>& prev,
                                               std::set<std::size_t>& already_chosen) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    if (!prev[i].score.valid() || already_chosen.count(i)) continue;
    if (!best || prev[i].score.total > prev[*best].score.total) best = i;
  }
  if (best) already_chosen.insert(*best);
  return best;
}

/// Single-point crossover at gene boundary `cut` in {1..6}; children are
/// clamped to the parameter ranges.
inline std::pair<Genome, Genome> crossover(const Genome& p1, const Genome& p2, int cut,
                                           const RangeArray& ranges) {
  if (cut < 1 || cut >= static_cast<int>(Genome::kGeneCount))
    throw std::invalid_argument("crossover: cut point out of range");
  auto g1 = p1.genes();
  auto g2 = p2.genes();
  for (std::size_t i = static_cast<std::size_t>(cut); i < Genome::kGeneCount; ++i)
    std::swap(g1[i], g2[i]);
  return {clamp_genome(Genome::from_genes(g1), ranges), clamp_genome(Genome::from_genes(g2), ranges)};
}

/// Redraws exactly one uniformly chosen gene from its range.
inline Genome mutate(const Genome& g, const RangeArray& ranges, SplitRng& rng) {
  const std::size_t idx = rng.uniform_index(Genome::kGeneCount);
  Genome out = g;
  out.set_gene(idx, rng.uniform(ranges[idx].low, ranges[idx].high));
  return out;
}

namespace detail {

/// Tournament over valid individuals: best score wins, ties go to the lower
/// population index.
inline std::size_t tournament(const std::vector<EvaluatedIndividual>& prev,
                              const std::vector<std::size_t>& valid_pool, int k, SplitRng& rng) {
  std::size_t winner = valid_pool[rng.uniform_index(valid_pool.size())];
  for (int i = 1; i < k; ++i) {
    const std::size_t challenger = valid_pool[rng.uniform_index(valid_pool.size())];
    const auto& a = prev[challenger];
    const auto& b = prev[winner];
    if (a.score.total > b.score.total || (a.score.total == b.score.total && challenger < winner))
      winner = challenger;
  }
  return winner;
}

}  // namespace detail

/// Builds the next population from the evaluated previous one.
///
/// Randomness is split per role: stream 0 of `gen_rng` drives operator
/// dispatch, stream 1+slot drives the construction of the individual(s)
/// starting at that slot, so the sequence is independent of how evaluation
/// is parallelized. Invalid individuals never enter any parent pool.
/// Requires at least two valid individuals in `prev` (the caller falls back
/// to random resampling otherwise). When the elitism pool is exhausted the
/// operator is redrawn; in the degenerate all-elitism configuration it
/// falls back to mutation so the loop stays total.
inline std::vector<Genome> next_generation(const std::vector<EvaluatedIndividual>& prev,
                                           const GaConfig& cfg, const RangeArray& ranges,
                                           const SplitRng& gen_rng) {
  cfg.validate();
  std::vector<std::size_t> valid_pool;
  for (std::size_t i = 0; i < prev.size(); ++i)
    if (prev[i].score.valid()) valid_pool.push_back(i);
  if (valid_pool.size() < 2)
    throw std::invalid_argument("next_generation: needs at least two valid individuals");

  SplitRng dispatch = gen_rng.split(0);
  std::set<std::size_t> chosen_elites;
  std::vector<Genome> out;
  out.reserve(cfg.population_size);

  while (out.size() < static_cast<std::size_t>(cfg.population_size)) {
    GaOperator op = select_operator(dispatch.uniform01(), cfg);
    if (op == GaOperator::elitism) {
      const auto pick = elitism_pick(prev, chosen_elites);
      if (pick) {
        out.push_back(prev[*pick].genome);
        continue;
      }
      if (cfg.mu_c + cfg.mu_m > 0.0) continue;  // redraw the operator
      op = GaOperator::mutation;
    }
    SplitRng rng = gen_rng.split(1 + out.size());
    if (op == GaOperator::crossover) {
      const std::size_t i1 = detail::tournament(prev, valid_pool, cfg.tournament_size, rng);
      const std::size_t i2 = detail::tournament(prev, valid_pool, cfg.tournament_size, rng);
      const int cut = 1 + static_cast<int>(rng.uniform_index(Genome::kGeneCount - 1));
      const auto [c1, c2] = crossover(prev[i1].genome, prev[i2].genome, cut, ranges);
      out.push_back(c1);
      if (out.size() < static_cast<std::size_t>(cfg.population_size)) out.push_back(c2);
    } else {
      const std::size_t subject = detail::tournament(prev, valid_pool, cfg.tournament_size, rng);
      out.push_back(mutate(prev[subject].genome, ranges, rng));
    }
  }
  return out;
}

/// Evaluates a whole generation in submission order.
using BatchEvaluator = std::function<std::vector<SimulationOutcome>(const std::vector<Genome>&)>;

struct EvaluatedGeneration {
  std::vector<EvaluatedIndividual> individuals;
  std::vector<SimulationOutcome> outcomes;
  std::uint64_t rng_checkpoint = 0;  // base seed of the generation's stream
  bool random_fallback = false;      // resampled because too few parents were valid
};

struct GaHistory {
  std::vector<EvaluatedGeneration> generations;
  std::vector<int> random_fallback_generations;
};

inline BatchEvaluator make_serial_evaluator(PathPair paths, SimulationConfig sim) {
  return [paths = std::move(paths), sim](const std::vector<Genome>& genomes) {
    std::vector<SimulationOutcome> out;
    out.reserve(genomes.size());
    for (const auto& g : genomes) out.push_back(run(paths, g, sim));
    return out;
  };
}

namespace detail {

inline constexpr std::uint64_t kGaStreamTag = 0x6741;        // GA generations
inline constexpr std::uint64_t kBaselineStreamTag = 0x5242;  // random baseline

inline std::vector<Genome> sample_generation(const RangeArray& ranges, int population,
                                             const SplitRng& gen_rng) {
  std::vector<Genome> out;
  out.reserve(population);
  for (int i = 0; i < population; ++i) {
    SplitRng rng = gen_rng.split(1 + i);
    out.push_back(sample_random_genome(ranges, rng));
  }
  return out;
}

inline EvaluatedGeneration evaluate_generation(std::vector<Genome> genomes,
                                               const BatchEvaluator& evaluate,
                                               const BandTable& bands, std::uint64_t checkpoint) {
  EvaluatedGeneration gen;
  gen.rng_checkpoint = checkpoint;
  gen.outcomes = evaluate(genomes);
  if (gen.outcomes.size() != genomes.size())
    throw std::runtime_error("evaluator returned wrong batch size");
  gen.individuals.reserve(genomes.size());
  for (std::size_t i = 0; i < genomes.size(); ++i)
    gen.individuals.push_back({genomes[i], risk_level(gen.outcomes[i], bands), i});
  return gen;
}

inline std::size_t count_valid(const EvaluatedGeneration& gen) {
  std::size_t n = 0;
  for (const auto& ind : gen.individuals) n += ind.score.valid();
  return n;
}

inline GaHistory run_search(const GaConfig& cfg, const RangeArray& ranges,
                            const BatchEvaluator& evaluate, const BandTable& bands,
                            std::uint64_t stream_tag, bool evolve) {
  cfg.validate();
  const SplitRng root = SplitRng(cfg.seed).split(stream_tag);
  GaHistory hist;
  hist.generations.reserve(cfg.generations);
  for (int g = 0; g < cfg.generations; ++g) {
    const SplitRng gen_rng = root.split(g);
    std::vector<Genome> genomes;
    bool fallback = false;
    if (!evolve || g == 0) {
      genomes = sample_generation(ranges, cfg.population_size, gen_rng);
    } else if (count_valid(hist.generations.back()) < 2) {
      genomes = sample_generation(ranges, cfg.population_size, gen_rng);
      fallback = true;
    } else {
      genomes = next_generation(hist.generations.back().individuals, cfg, ranges, gen_rng);
    }
    auto gen = evaluate_generation(std::move(genomes), evaluate, bands, gen_rng.base_seed());
    gen.random_fallback = fallback;
    if (fallback) hist.random_fallback_generations.push_back(g);
    hist.generations.push_back(std::move(gen));
  }
  return hist;
}

}  // namespace detail

/// Full search: generation 0 is random, every later generation is built by
/// next_generation over the evaluated previous one. Deterministic in
/// (cfg.seed, ranges, evaluator).
inline GaHistory run_ga(const GaConfig& cfg, const RangeArray& ranges,
                        const BatchEvaluator& evaluate, const BandTable& bands = {}) {
  return detail::run_search(cfg, ranges, evaluate, bands, detail::kGaStreamTag, true);
}

/// Budget-matched baseline: every generation sampled uniformly at random
/// from its own seed stream, independent of the GA stream.
inline GaHistory run_random_baseline(const GaConfig& cfg, const RangeArray& ranges,
                                     const BatchEvaluator& evaluate, const BandTable& bands = {}) {
  return detail::run_search(cfg, ranges, evaluate, bands, detail::kBaselineStreamTag, false);
}

}  // namespace ccsearch
