#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ccsearch/ga.hpp"

using namespace ccsearch;

namespace {

RangeArray ordered_defaults() { return validate_ranges(default_ranges()); }

RiskScore score_of(int total) {
  RiskScore s;
  s.total = total;
  return s;
}

EvaluatedIndividual individual(const Genome& g, int total) {
  return {g, score_of(total), 0};
}

Genome constant_genome(double v) { return {v, v, v, v, v, v, v}; }

/// Evaluator stub mapping ego_speed to a fixed outcome family: speeds below
/// 10 km/h are invalid, the rest valid with md proportional to the speed.
SimulationOutcome stub_outcome(const Genome& g) {
  SimulationOutcome o;
  if (g.ego_speed_kmh < 10.0) {
    o.valid = false;
    o.invalid_reason = InvalidReason::no_interaction;
    return o;
  }
  o.valid = true;
  o.collision = g.ego_speed_kmh > 70.0;
  o.md_cm = g.ego_speed_kmh * 20.0;
  o.d_ms_cm = 3000.0;
  o.ttc_ms_cs = 200.0;
  return o;
}

BatchEvaluator stub_evaluator() {
  return [](const std::vector<Genome>& genomes) {
    std::vector<SimulationOutcome> out;
    for (const auto& g : genomes) out.push_back(stub_outcome(g));
    return out;
  };
}

}  // namespace

// --- config ------------------------------------------------------------------

TEST(GaConfig, DefaultsMatchProtocol) {
  const GaConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.mu_s, 0.1);
  EXPECT_DOUBLE_EQ(cfg.mu_c, 0.8);
  EXPECT_DOUBLE_EQ(cfg.mu_m, 0.1);
  EXPECT_EQ(cfg.population_size, 100);
  EXPECT_EQ(cfg.generations, 30);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(GaConfig, ProbabilitiesMustSumToOne) {
  GaConfig cfg;
  cfg.mu_s = 0.2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

// --- operator dispatch ---------------------------------------------------------

TEST(SelectOperator, IntervalBoundaries) {
  const GaConfig cfg;
  EXPECT_EQ(select_operator(0.0, cfg), GaOperator::elitism);
  EXPECT_EQ(select_operator(0.05, cfg), GaOperator::elitism);
  EXPECT_EQ(select_operator(0.1, cfg), GaOperator::elitism);  // shared endpoint -> elitism
  EXPECT_EQ(select_operator(0.1 + 1e-12, cfg), GaOperator::crossover);
  EXPECT_EQ(select_operator(0.5, cfg), GaOperator::crossover);
  EXPECT_EQ(select_operator(0.9, cfg), GaOperator::mutation);
  EXPECT_EQ(select_operator(0.95, cfg), GaOperator::mutation);
  EXPECT_EQ(select_operator(1.0, cfg), GaOperator::mutation);
}

TEST(SelectOperator, FrequenciesWithinThreeSigma) {
  const GaConfig cfg;
  SplitRng rng(17);
  const int n = 100000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[static_cast<int>(select_operator(rng.uniform01(), cfg))];
  const double expected[3] = {0.1 * n, 0.8 * n, 0.1 * n};
  const double p[3] = {0.1, 0.8, 0.1};
  for (int k = 0; k < 3; ++k) {
    const double sigma = std::sqrt(n * p[k] * (1.0 - p[k]));
    EXPECT_NEAR(counts[k], expected[k], 3.0 * sigma) << "operator " << k;
  }
}

// --- elitism -------------------------------------------------------------------

TEST(ElitismPick, ArgmaxThenSecondBest) {
  const std::vector<EvaluatedIndividual> prev = {individual(constant_genome(1), 5),
                                                 individual(constant_genome(2), 12),
                                                 individual(constant_genome(3), 7)};
  std::set<std::size_t> chosen;
  EXPECT_EQ(elitism_pick(prev, chosen).value(), 1u);
  EXPECT_EQ(elitism_pick(prev, chosen).value(), 2u);
  EXPECT_EQ(elitism_pick(prev, chosen).value(), 0u);
  EXPECT_FALSE(elitism_pick(prev, chosen).has_value());  // pool exhausted
}

TEST(ElitismPick, TieBrokenByLowerIndex) {
  const std::vector<EvaluatedIndividual> prev = {individual(constant_genome(1), 9),
                                                 individual(constant_genome(2), 9)};
  std::set<std::size_t> chosen;
  EXPECT_EQ(elitism_pick(prev, chosen).value(), 0u);
}

TEST(ElitismPick, InvalidIndividualsNeverPicked) {
  const std::vector<EvaluatedIndividual> prev = {individual(constant_genome(1), -1),
                                                 individual(constant_genome(2), 3)};
  std::set<std::size_t> chosen;
  EXPECT_EQ(elitism_pick(prev, chosen).value(), 1u);
  EXPECT_FALSE(elitism_pick(prev, chosen).has_value());
}

// --- crossover -----------------------------------------------------------------

TEST(Crossover, IdenticalParentsGiveIdenticalChildren) {
  const auto ranges = ordered_defaults();
  const Genome g{10.0, 50.0, 0.5, 20.0, 30.0, 5.0, 1.0};
  const auto [c1, c2] = crossover(g, g, 3, ranges);
  EXPECT_EQ(c1, g);
  EXPECT_EQ(c2, g);
}

TEST(Crossover, CutThreeSwapsTail) {
  const auto ranges = ordered_defaults();
  const Genome p1{1.0, 6.0, 0.1, 10.0, 11.0, 12.0, 1.3};
  const Genome p2{2.0, 7.0, 0.2, 20.0, 21.0, 19.0, 2.3};
  const auto [c1, c2] = crossover(p1, p2, 3, ranges);
  EXPECT_EQ(c1, (Genome{1.0, 6.0, 0.1, 20.0, 21.0, 19.0, 2.3}));
  EXPECT_EQ(c2, (Genome{2.0, 7.0, 0.2, 10.0, 11.0, 12.0, 1.3}));
}

TEST(Crossover, PositionwiseMultisetPreservedForEveryCut) {
  const auto ranges = ordered_defaults();
  const Genome p1{1.0, 6.0, 0.1, 10.0, 11.0, 12.0, 1.3};
  const Genome p2{2.0, 7.0, 0.2, 20.0, 21.0, 19.0, 2.3};
  for (int cut = 1; cut <= 6; ++cut) {
    const auto [c1, c2] = crossover(p1, p2, cut, ranges);
    for (std::size_t i = 0; i < Genome::kGeneCount; ++i) {
      const std::multiset<double> parents{p1.gene(i), p2.gene(i)};
      const std::multiset<double> children{c1.gene(i), c2.gene(i)};
      EXPECT_EQ(parents, children) << "cut " << cut << " gene " << i;
    }
  }
  EXPECT_THROW(crossover(p1, p2, 0, ranges), std::invalid_argument);
  EXPECT_THROW(crossover(p1, p2, 7, ranges), std::invalid_argument);
}

// --- mutation ------------------------------------------------------------------

TEST(Mutate, CollapsedRangesLeaveGenomeUnchanged) {
  auto ranges = ordered_defaults();
  const Genome g{10.0, 50.0, 0.5, 20.0, 30.0, 5.0, 1.0};
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    ranges[i].low = g.gene(i);
    ranges[i].high = g.gene(i);
  }
  SplitRng rng(3);
  EXPECT_EQ(mutate(g, ranges, rng), g);
}

TEST(Mutate, DeterministicUnderSeed) {
  const auto ranges = ordered_defaults();
  const Genome g{10.0, 50.0, 0.5, 20.0, 30.0, 5.0, 1.0};
  SplitRng a(11), b(11);
  EXPECT_EQ(mutate(g, ranges, a), mutate(g, ranges, b));
}

TEST(Mutate, ChangesAtMostOneGeneChosenUniformly) {
  const auto ranges = ordered_defaults();
  const Genome g{10.0, 50.0, 0.5, 20.0, 30.0, 5.0, 1.0};
  SplitRng root(13);
  const int n = 10000;
  int counts[Genome::kGeneCount] = {};
  for (int i = 0; i < n; ++i) {
    SplitRng rng = root.split(i);
    const Genome m = mutate(g, ranges, rng);
    int changed = -1;
    for (std::size_t k = 0; k < Genome::kGeneCount; ++k)
      if (m.gene(k) != g.gene(k)) {
        ASSERT_EQ(changed, -1);  // at most one gene differs
        changed = static_cast<int>(k);
      }
    if (changed >= 0) ++counts[changed];
    // redraw can land on the old value; count it via the rng index instead
  }
  const double p = 1.0 / Genome::kGeneCount;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  for (std::size_t k = 0; k < Genome::kGeneCount; ++k)
    EXPECT_NEAR(counts[k], n * p, 3.0 * sigma + 1.0) << "gene " << k;
}

// --- next_generation -----------------------------------------------------------

namespace {

std::vector<EvaluatedIndividual> evaluated_population(int n, int n_invalid = 0) {
  std::vector<EvaluatedIndividual> pop;
  for (int i = 0; i < n; ++i) {
    const bool invalid = i < n_invalid;
    pop.push_back(individual(constant_genome(20.0 + i), invalid ? -1 : i));
  }
  return pop;
}

}  // namespace

TEST(NextGeneration, PureElitismYieldsTopDistinctIndividuals) {
  GaConfig cfg;
  cfg.mu_s = 1.0;
  cfg.mu_c = 0.0;
  cfg.mu_m = 0.0;
  cfg.population_size = 4;
  const auto prev = evaluated_population(8);
  const auto next = next_generation(prev, cfg, ordered_defaults(), SplitRng(1));
  ASSERT_EQ(next.size(), 4u);
  // scores were 0..7, so the top four are individuals 7,6,5,4 in that order
  EXPECT_EQ(next[0], prev[7].genome);
  EXPECT_EQ(next[1], prev[6].genome);
  EXPECT_EQ(next[2], prev[5].genome);
  EXPECT_EQ(next[3], prev[4].genome);
}

TEST(NextGeneration, PureMutationChangesAtMostOneGenePerChild) {
  GaConfig cfg;
  cfg.mu_s = 0.0;
  cfg.mu_c = 0.0;
  cfg.mu_m = 1.0;
  cfg.population_size = 40;
  const auto prev = evaluated_population(6);
  const auto next = next_generation(prev, cfg, ordered_defaults(), SplitRng(2));
  ASSERT_EQ(next.size(), 40u);
  for (const auto& child : next) {
    int best_match = 0;
    for (const auto& parent : prev) {
      int same = 0;
      for (std::size_t k = 0; k < Genome::kGeneCount; ++k)
        same += child.gene(k) == parent.genome.gene(k);
      best_match = std::max(best_match, same);
    }
    EXPECT_GE(best_match, static_cast<int>(Genome::kGeneCount) - 1);
  }
}

TEST(NextGeneration, DeterministicForFixedStream) {
  GaConfig cfg;
  cfg.population_size = 25;
  const auto prev = evaluated_population(25, 5);
  const auto a = next_generation(prev, cfg, ordered_defaults(), SplitRng(77).split(3));
  const auto b = next_generation(prev, cfg, ordered_defaults(), SplitRng(77).split(3));
  EXPECT_EQ(a, b);
}

TEST(NextGeneration, ExactPopulationSizeForOddAndEvenTargets) {
  GaConfig cfg;
  const auto prev = evaluated_population(10);
  for (const int size : {1, 2, 7, 30}) {
    cfg.population_size = size;
    EXPECT_EQ(next_generation(prev, cfg, ordered_defaults(), SplitRng(5)).size(),
              static_cast<std::size_t>(size));
  }
}

TEST(NextGeneration, InvalidIndividualsNeverBreed) {
  // valid individuals all share one marker value; invalid ones carry another
  GaConfig cfg;
  cfg.population_size = 60;
  std::vector<EvaluatedIndividual> prev;
  for (int i = 0; i < 12; ++i) {
    const bool invalid = i % 2 == 0;
    prev.push_back(individual(constant_genome(invalid ? 66.0 : 21.0), invalid ? -1 : 1));
  }
  const auto next = next_generation(prev, cfg, ordered_defaults(), SplitRng(8));
  for (const auto& child : next)
    for (std::size_t k = 0; k < Genome::kGeneCount; ++k)
      EXPECT_NE(child.gene(k), 66.0);  // mutation may move one gene, never to 66 exactly
}

TEST(NextGeneration, RequiresTwoValidIndividuals) {
  GaConfig cfg;
  const auto prev = evaluated_population(5, 4);  // one valid
  EXPECT_THROW(next_generation(prev, cfg, ordered_defaults(), SplitRng(9)), std::invalid_argument);
}

// --- run_ga ----------------------------------------------------------------------

TEST(RunGa, SingleGenerationIsTheRandomInitialPopulation) {
  GaConfig cfg;
  cfg.generations = 1;
  cfg.population_size = 12;
  cfg.seed = 4;
  const auto hist = run_ga(cfg, ordered_defaults(), stub_evaluator());
  ASSERT_EQ(hist.generations.size(), 1u);
  EXPECT_EQ(hist.generations[0].individuals.size(), 12u);
  EXPECT_TRUE(hist.random_fallback_generations.empty());
}

TEST(RunGa, DeterministicUnderEqualSeeds) {
  GaConfig cfg;
  cfg.generations = 6;
  cfg.population_size = 20;
  cfg.seed = 99;
  const auto a = run_ga(cfg, ordered_defaults(), stub_evaluator());
  const auto b = run_ga(cfg, ordered_defaults(), stub_evaluator());
  ASSERT_EQ(a.generations.size(), b.generations.size());
  for (std::size_t g = 0; g < a.generations.size(); ++g) {
    EXPECT_EQ(a.generations[g].individuals, b.generations[g].individuals);
    EXPECT_EQ(a.generations[g].rng_checkpoint, b.generations[g].rng_checkpoint);
  }
}

TEST(RunGa, PopulationSizeInvariantEveryGeneration) {
  GaConfig cfg;
  cfg.generations = 8;
  cfg.population_size = 17;
  cfg.seed = 12;
  const auto hist = run_ga(cfg, ordered_defaults(), stub_evaluator());
  ASSERT_EQ(hist.generations.size(), 8u);
  for (const auto& gen : hist.generations) {
    EXPECT_EQ(gen.individuals.size(), 17u);
    EXPECT_EQ(gen.outcomes.size(), 17u);
  }
}

TEST(RunGa, ConstantEvaluatorKeepsMeanRiskConstant) {
  GaConfig cfg;
  cfg.generations = 5;
  cfg.population_size = 10;
  cfg.seed = 3;
  const BatchEvaluator const_eval = [](const std::vector<Genome>& genomes) {
    std::vector<SimulationOutcome> out(genomes.size());
    for (auto& o : out) {
      o.valid = true;
      o.collision = false;
      o.md_cm = 900.0;
      o.d_ms_cm = 3900.0;
      o.ttc_ms_cs = 380.0;
    }
    return out;
  };
  const auto hist = run_ga(cfg, ordered_defaults(), const_eval);
  for (const auto& gen : hist.generations)
    for (const auto& ind : gen.individuals) EXPECT_EQ(ind.score.total, 9);  // 0+3+3+3
}

TEST(RunGa, AllInvalidGenerationsFallBackToRandomResampling) {
  GaConfig cfg;
  cfg.generations = 4;
  cfg.population_size = 6;
  cfg.seed = 21;
  const BatchEvaluator invalid_eval = [](const std::vector<Genome>& genomes) {
    std::vector<SimulationOutcome> out(genomes.size());
    for (auto& o : out) {
      o.valid = false;
      o.invalid_reason = InvalidReason::no_interaction;
    }
    return out;
  };
  const auto hist = run_ga(cfg, ordered_defaults(), invalid_eval);
  ASSERT_EQ(hist.generations.size(), 4u);
  EXPECT_EQ(hist.random_fallback_generations, (std::vector<int>{1, 2, 3}));
  for (const auto& gen : hist.generations) EXPECT_EQ(gen.individuals.size(), 6u);
}

TEST(RunGa, ScoresConsistentWithOutcomesViaRiskLevel) {
  GaConfig cfg;
  cfg.generations = 4;
  cfg.population_size = 15;
  cfg.seed = 31;
  const auto hist = run_ga(cfg, ordered_defaults(), stub_evaluator());
  for (const auto& gen : hist.generations)
    for (const auto& ind : gen.individuals)
      EXPECT_EQ(ind.score, risk_level(gen.outcomes[ind.outcome_ref]));
}

TEST(RunRandomBaseline, IndependentOfGaStreamButSameShape) {
  GaConfig cfg;
  cfg.generations = 3;
  cfg.population_size = 9;
  cfg.seed = 55;
  const auto ga = run_ga(cfg, ordered_defaults(), stub_evaluator());
  const auto rd = run_random_baseline(cfg, ordered_defaults(), stub_evaluator());
  ASSERT_EQ(rd.generations.size(), 3u);
  EXPECT_NE(ga.generations[0].individuals, rd.generations[0].individuals);
  for (const auto& gen : rd.generations) EXPECT_EQ(gen.individuals.size(), 9u);
}
