#pragma once

// Seeded Monte Carlo over calibration draws.
//
// Each trial draws m calibration records and K evaluation records from a
// score source, calibrates once, and measures the coverage of that single
// predictor on the K evaluation records. Across M trials this yields the
// distribution of calibration-set-conditional coverage; its mean is the
// unconditional (marginal) estimator.
//
// Trial seeds are derived from (master seed, trial index) before any work is
// scheduled and results are aggregated in trial order, so the report does not
// depend on the number of worker threads.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "confcov/conformal.hpp"
#include "confcov/guarantees.hpp"
#include "confcov/rng.hpp"

namespace confcov {

enum class SamplingMode { kWithoutReplacement, kWithReplacement };

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

enum class SourceKind { kSyntheticUniform, kEmpiricalPool };

std::string_view to_string(SourceKind kind);

// Default number of classes for the synthetic source.
inline constexpr std::size_t kSyntheticClasses = 9;

struct ScoreSource {
  SourceKind kind = SourceKind::kSyntheticUniform;
  std::size_t synthetic_classes = kSyntheticClasses;
  // Labeled rows; used when kind == kEmpiricalPool.
  std::vector<ProbabilityRecord> pool;

  static ScoreSource synthetic(std::size_t num_classes = kSyntheticClasses);
  // Throws InputError on an empty pool or an unlabeled row.
  static ScoreSource empirical(std::vector<ProbabilityRecord> rows);

  LabelSpace label_space() const;
};

struct SimulationConfig {
  std::size_t m = 10;
  double alpha = 0.1;
  std::size_t trials = 10000;
  std::size_t eval_size = 1000;
  std::uint64_t seed = 0;
  double shortfall_threshold = 0.85;
  SamplingMode sampling = SamplingMode::kWithoutReplacement;
  std::size_t histogram_bins = 40;

  void validate() const;
};

struct TrialResult {
  std::size_t trial_index = 0;
  std::uint64_t trial_seed = 0;
  std::size_t covered = 0;
  double conditional_coverage = 0.0;
  double mean_set_size = 0.0;
  bool cover_all = false;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges, edges[i] = i / bins
  std::vector<std::size_t> counts;
  std::vector<double> frequencies;

  std::size_t bins() const noexcept { return counts.size(); }
  std::size_t total() const noexcept;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

// Equal-width bins over [0, 1]; right-open except the last bin, which is
// closed at 1. Throws InputError for bins == 0 or a value outside [0, 1].
Histogram build_histogram(std::span<const double> values, std::size_t bins);

struct SimulationReport {
  SimulationConfig config;
  SourceKind source_kind = SourceKind::kSyntheticUniform;
  std::size_t num_classes = 0;
  std::size_t pool_size = 0;
  std::vector<TrialResult> trials;
  Histogram histogram;
  double mean_coverage = 0.0;
  // Standard error of mean_coverage from the spread of per-trial coverages.
  double mean_coverage_std_error = 0.0;
  double shortfall_fraction = 0.0;
  double shortfall_std_error = 0.0;
  double mean_set_size = 0.0;
  std::size_t cover_all_trials = 0;
  std::optional<CoverageLaw> analytic_law;
  std::optional<double> analytic_shortfall;
  double marginal_coverage = 0.0;
};

struct RunOptions {
  // 0 = one worker per hardware thread. Does not affect the report.
  std::size_t threads = 1;
  // Abort with ExecutionError when trials * (m + eval_size) exceeds this.
  std::uint64_t max_draws = 50'000'000'000ULL;
};

// One synthetic record: label uniform on the classes, true-label LAC score
// exactly Uniform(0, 1) (p_label = 1 - u); the remaining mass u is split over
// the other classes by uniform spacings, so the vector sums to 1 and scores
// are almost surely tie-free. Writes the C probabilities into `probs`.
std::size_t synthetic_uniform_draw(Xoshiro256& rng, std::span<double> probs);

SimulationReport run_simulation(const SimulationConfig& config, const ScoreSource& source,
                                const RunOptions& options = {});

// Runs one trial; exposed for tests and benchmarks.
TrialResult run_trial(const SimulationConfig& config, const ScoreSource& source,
                      std::size_t trial_index);

}  // namespace confcov
