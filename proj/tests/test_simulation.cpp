#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>

#include "confcov/error.hpp"
#include "confcov/rng.hpp"
#include "confcov/simulation.hpp"
#include "oracles/oracles.hpp"

namespace confcov {
namespace {

TEST(Rng, SplitMixReferenceSequence) {
  // First outputs of SplitMix64 seeded with 0 (reference implementation).
  SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(sm.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(sm.next(), 0x06C45D188009454FULL);
}

TEST(Rng, TrialSeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_trial_seed(42, 0), derive_trial_seed(42, 0));
  EXPECT_NE(derive_trial_seed(42, 0), derive_trial_seed(42, 1));
  EXPECT_NE(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
  SplitMix64 sm(42);
  EXPECT_EQ(derive_trial_seed(42, 0), sm.next());
  EXPECT_EQ(derive_trial_seed(42, 1), sm.next());
}

TEST(Rng, UniformIndexIsInRangeAndRoughlyFlat) {
  Xoshiro256 rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(SyntheticDraw, RecordIsValidAndTrueScoreUniform) {
  Xoshiro256 rng(2024);
  std::vector<double> probs(kSyntheticClasses);
  std::vector<double> true_scores;
  std::vector<std::size_t> label_counts(kSyntheticClasses, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::size_t label = synthetic_uniform_draw(rng, probs);
    ASSERT_LT(label, kSyntheticClasses);
    double sum = 0.0;
    for (double p : probs) {
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
      sum += p;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    const double s = 1.0 - probs[label];
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
    true_scores.push_back(s);
    ++label_counts[label];
  }
  const double mean = std::accumulate(true_scores.begin(), true_scores.end(), 0.0) / n;
  EXPECT_NEAR(mean, 0.5, 0.01);
  EXPECT_LT(oracle::ks_distance(true_scores, [](double x) { return x; }), 0.01);
  for (auto c : label_counts) EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / 9.0, 0.01);
}

TEST(SyntheticDraw, IdenticalStatesGiveIdenticalDraws) {
  Xoshiro256 a(99);
  Xoshiro256 b(99);
  std::vector<double> pa(5);
  std::vector<double> pb(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(synthetic_uniform_draw(a, pa), synthetic_uniform_draw(b, pb));
    EXPECT_EQ(pa, pb);
  }
}

TEST(SyntheticDraw, TwoClasses) {
  Xoshiro256 rng(5);
  std::vector<double> probs(2);
  for (int i = 0; i < 100; ++i) {
    const auto label = synthetic_uniform_draw(rng, probs);
    EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-15);
    EXPECT_LT(label, 2u);
  }
}

TEST(Histogram, Examples) {
  const std::vector<double> v{0.0, 0.5, 1.0};
  const auto h = build_histogram(v, 2);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(h.total(), 3u);

  const auto empty = build_histogram(std::vector<double>{}, 10);
  EXPECT_EQ(empty.counts, std::vector<std::size_t>(10, 0));
  EXPECT_EQ(empty.edges.size(), 11u);
}

TEST(Histogram, EdgesAreRightOpen) {
  // k / 10 must land in bin k even where k / 10 * 10 rounds below k.
  std::vector<double> v;
  for (int k = 0; k < 10; ++k) v.push_back(k / 10.0);
  const auto h = build_histogram(v, 10);
  EXPECT_EQ(h.counts, std::vector<std::size_t>(10, 1));
  std::vector<double> w;
  for (int k = 0; k <= 1000; ++k) w.push_back(k / 1000.0);
  const auto g = build_histogram(w, 40);
  for (std::size_t b = 0; b + 1 < 40; ++b) EXPECT_EQ(g.counts[b], 25u) << b;
  EXPECT_EQ(g.counts[39], 26u);
}

TEST(Histogram, Errors) {
  EXPECT_THROW(build_histogram(std::vector<double>{0.5}, 0), InputError);
  EXPECT_THROW(build_histogram(std::vector<double>{1.5}, 4), InputError);
  EXPECT_THROW(build_histogram(std::vector<double>{-0.1}, 4), InputError);
  EXPECT_THROW(build_histogram(std::vector<double>{std::nan("")}, 4), InputError);
}

TEST(Histogram, BetaTenOneBinFrequencies) {
  Xoshiro256 rng(17);
  std::vector<double> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(std::pow(rng.uniform01(), 0.1));  // inverse CDF
  const auto h = build_histogram(draws, 40);
  double worst = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const double expected = std::pow(h.edges[b + 1], 10) - std::pow(h.edges[b], 10);
    worst = std::max(worst, std::abs(h.frequencies[b] - expected));
  }
  EXPECT_LT(worst, 0.02);
}

SimulationConfig small_config() {
  SimulationConfig c;
  c.m = 10;
  c.alpha = 0.1;
  c.trials = 400;
  c.eval_size = 200;
  c.seed = 7;
  return c;
}

TEST(RunSimulation, ReportInvariants) {
  const auto rep = run_simulation(small_config(), ScoreSource::synthetic());
  ASSERT_EQ(rep.trials.size(), 400u);
  double sum = 0.0;
  std::size_t below = 0;
  for (std::size_t j = 0; j < rep.trials.size(); ++j) {
    const auto& t = rep.trials[j];
    EXPECT_EQ(t.trial_index, j);
    EXPECT_EQ(t.trial_seed, derive_trial_seed(7, j));
    EXPECT_EQ(t.conditional_coverage * 200.0, static_cast<double>(t.covered));
    sum += t.conditional_coverage;
    below += t.conditional_coverage < 0.85 ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(rep.mean_coverage, sum / 400.0);
  EXPECT_EQ(rep.shortfall_fraction, static_cast<double>(below) / 400.0);
  EXPECT_EQ(rep.histogram.total(), 400u);
  EXPECT_NEAR(std::accumulate(rep.histogram.frequencies.begin(), rep.histogram.frequencies.end(), 0.0),
              1.0, 1e-9);
  ASSERT_TRUE(rep.analytic_law.has_value());
  EXPECT_EQ(rep.analytic_law->a, 10u);
  EXPECT_EQ(rep.analytic_law->b, 1u);
  EXPECT_EQ(rep.num_classes, kSyntheticClasses);
}

TEST(RunSimulation, DeterministicAndScheduleIndependent) {
  const auto config = small_config();
  const auto a = run_simulation(config, ScoreSource::synthetic(), {1});
  const auto b = run_simulation(config, ScoreSource::synthetic(), {1});
  const auto c = run_simulation(config, ScoreSource::synthetic(), {4});
  const auto d = run_simulation(config, ScoreSource::synthetic(), {0});
  EXPECT_EQ(a.trials, b.trials);
  EXPECT_EQ(a.trials, c.trials);
  EXPECT_EQ(a.trials, d.trials);
  EXPECT_EQ(a.histogram, c.histogram);
  EXPECT_EQ(a.mean_coverage, c.mean_coverage);
  // A standalone trial equals the same trial inside a batch.
  EXPECT_EQ(run_trial(config, ScoreSource::synthetic(), 123), a.trials[123]);
}

TEST(RunSimulation, PaperScaleShortfallAndMean) {
  SimulationConfig c;
  c.m = 10;
  c.alpha = 0.1;
  c.trials = 10000;
  c.eval_size = 1000;
  c.seed = 42;
  const auto rep = run_simulation(c, ScoreSource::synthetic());
  EXPECT_NEAR(rep.shortfall_fraction, 0.197, 0.02);
  EXPECT_NEAR(rep.mean_coverage, 10.0 / 11.0, 0.005);
  EXPECT_NEAR(*rep.analytic_shortfall, 0.19687440434072265625, 1e-15);
}

TEST(RunSimulation, ConditionalCoverageFollowsCoverageLaw) {
  // Each trial's coverage is one draw from ~Beta(10, 1) (K = 1000 blurs it slightly).
  SimulationConfig c = small_config();
  c.trials = 2000;
  c.eval_size = 1000;
  const auto rep = run_simulation(c, ScoreSource::synthetic());
  std::vector<double> cov;
  for (const auto& t : rep.trials) cov.push_back(t.conditional_coverage);
  const double ks = oracle::ks_distance(cov, [](double x) { return boost::math::ibeta(10.0, 1.0, x); });
  EXPECT_LT(ks, 0.05);
}

TEST(RunSimulation, GrandMeanWithinThreeStandardErrors) {
  for (std::size_t m : {9u, 19u, 50u}) {
    SimulationConfig c = small_config();
    c.m = m;
    c.trials = 1000;
    c.eval_size = 500;
    c.seed = 1000 + m;  // same seed across m would reuse calibration streams
    const auto rep = run_simulation(c, ScoreSource::synthetic());
    EXPECT_LE(std::abs(rep.mean_coverage - marginal_coverage_exact(m, 0.1)),
              3.0 * rep.mean_coverage_std_error)
        << "m=" << m;
  }
}

TEST(RunSimulation, CoverAllTrialsAlwaysCover) {
  SimulationConfig c = small_config();
  c.m = 3;
  const auto rep = run_simulation(c, ScoreSource::synthetic());
  EXPECT_EQ(rep.mean_coverage, 1.0);
  EXPECT_EQ(rep.cover_all_trials, c.trials);
  EXPECT_EQ(rep.mean_set_size, static_cast<double>(kSyntheticClasses));
  EXPECT_TRUE(rep.analytic_law->degenerate);
}

std::vector<ProbabilityRecord> synthetic_pool(std::size_t n, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<ProbabilityRecord> rows;
  std::vector<double> probs(4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = synthetic_uniform_draw(rng, probs);
    rows.push_back({"r" + std::to_string(i), label, probs});
  }
  return rows;
}

TEST(RunSimulation, EmpiricalPoolWithoutReplacement) {
  SimulationConfig c = small_config();
  c.trials = 1000;
  c.eval_size = 300;
  const auto source = ScoreSource::empirical(synthetic_pool(5000, 3));
  const auto rep = run_simulation(c, source, {3});
  EXPECT_EQ(rep.pool_size, 5000u);
  EXPECT_FALSE(rep.analytic_law.has_value());
  EXPECT_NEAR(rep.mean_coverage, 10.0 / 11.0, 0.02);
  EXPECT_EQ(run_simulation(c, source, {1}).trials, rep.trials);
  EXPECT_EQ(run_trial(c, source, 517), rep.trials[517]);
}

TEST(RunSimulation, PoolTooSmallForWithoutReplacement) {
  SimulationConfig c = small_config();
  c.eval_size = 1000;
  const auto source = ScoreSource::empirical(synthetic_pool(50, 3));
  EXPECT_THROW(run_simulation(c, source), InputError);
  c.sampling = SamplingMode::kWithReplacement;
  EXPECT_NO_THROW(run_simulation(c, source));
}

TEST(RunSimulation, PoolOfExactlyMPlusK) {
  // Every trial uses the whole pool; the partition into calibration and
  // evaluation differs per trial.
  SimulationConfig c = small_config();
  c.trials = 50;
  c.eval_size = 90;
  const auto source = ScoreSource::empirical(synthetic_pool(100, 8));
  const auto rep = run_simulation(c, source);
  double total_set = 0.0;
  for (const auto& t : rep.trials) total_set += t.mean_set_size;
  EXPECT_GT(total_set, 0.0);
  EXPECT_GT(rep.histogram.total(), 0u);
}

TEST(RunSimulation, InvalidInputs) {
  SimulationConfig c = small_config();
  c.trials = 0;
  EXPECT_THROW(run_simulation(c, ScoreSource::synthetic()), InputError);
  c = small_config();
  c.shortfall_threshold = 1.0;
  EXPECT_THROW(run_simulation(c, ScoreSource::synthetic()), InputError);
  c = small_config();
  c.histogram_bins = 0;
  EXPECT_THROW(run_simulation(c, ScoreSource::synthetic()), InputError);
  EXPECT_THROW(ScoreSource::empirical({}), InputError);
  EXPECT_THROW(ScoreSource::empirical({{"a", std::nullopt, {0.5, 0.5}}}), InputError);
  EXPECT_THROW(parse_sampling_mode("bootstrap"), ConfigError);
}

TEST(RunSimulation, DrawBudgetExceeded) {
  RunOptions opts;
  opts.max_draws = 1000;
  try {
    run_simulation(small_config(), ScoreSource::synthetic(), opts);
    FAIL() << "expected ExecutionError";
  } catch (const ExecutionError& e) {
    EXPECT_EQ(e.completed(), 0u);
    EXPECT_EQ(e.total(), 400u);
  }
}

TEST(RunSimulation, ShortfallShrinksWithCalibrationSize) {
  double prev = 1.0;
  for (std::size_t m : {10u, 50u, 200u}) {
    const double s = shortfall_probability(coverage_law(m, 0.1), 0.85);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

}  // namespace
}  // namespace confcov
