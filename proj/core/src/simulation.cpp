#include "confcov/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "confcov/error.hpp"

namespace confcov {

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::kWithReplacement ? "with-replacement" : "without-replacement";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "without-replacement") return SamplingMode::kWithoutReplacement;
  if (name == "with-replacement") return SamplingMode::kWithReplacement;
  throw ConfigError("unknown sampling mode '" + std::string(name) + "'");
}

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::kEmpiricalPool ? "empirical-pool" : "synthetic-uniform";
}

ScoreSource ScoreSource::synthetic(std::size_t num_classes) {
  ScoreSource s;
  s.kind = SourceKind::kSyntheticUniform;
  s.synthetic_classes = LabelSpace::of(num_classes).num_classes;
  return s;
}

ScoreSource ScoreSource::empirical(std::vector<ProbabilityRecord> rows) {
  if (rows.empty()) throw InputError("score pool is empty");
  const LabelSpace space = LabelSpace::of(rows.front().probs.size());
  for (const auto& r : rows) {
    validate_record(r, space);
    if (!r.label) throw InputError("pool row '" + r.id + "' has no label");
  }
  ScoreSource s;
  s.kind = SourceKind::kEmpiricalPool;
  s.pool = std::move(rows);
  return s;
}

LabelSpace ScoreSource::label_space() const {
  if (kind == SourceKind::kSyntheticUniform) return LabelSpace{synthetic_classes};
  return LabelSpace{pool.empty() ? 0 : pool.front().probs.size()};
}

void SimulationConfig::validate() const {
  if (m < 1) throw InputError("calibration size m must be at least 1");
  validate_alpha(alpha);
  if (trials < 1) throw InputError("trials must be at least 1");
  if (eval_size < 1) throw InputError("eval size must be at least 1");
  if (!(shortfall_threshold > 0.0 && shortfall_threshold < 1.0)) {
    throw InputError("shortfall threshold must lie in (0, 1)");
  }
  if (histogram_bins < 1) throw InputError("histogram needs at least one bin");
}

std::size_t Histogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram build_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw InputError("histogram needs at least one bin");
  Histogram h;
  const double width = static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / width;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError("histogram value " + std::to_string(v) + " outside [0, 1]");
    }
    auto idx = std::min(static_cast<std::size_t>(v * width), bins - 1);
    // v * bins can round across an edge; settle against the stored edges.
    while (idx > 0 && v < h.edges[idx]) --idx;
    while (idx + 1 < bins && v >= h.edges[idx + 1]) ++idx;
    ++h.counts[idx];
  }
  h.frequencies.assign(bins, 0.0);
  if (!values.empty()) {
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < bins; ++i) h.frequencies[i] = static_cast<double>(h.counts[i]) / n;
  }
  return h;
}

std::size_t synthetic_uniform_draw(Xoshiro256& rng, std::span<double> probs) {
  const std::size_t classes = probs.size();
  const auto label = static_cast<std::size_t>(rng.uniform_index(classes));
  const double u = rng.uniform01();
  probs[label] = 1.0 - u;

  // Uniform spacings of [0, u] over the other C - 1 classes: C - 2 sorted
  // cut points, insertion-sorted as they are drawn.
  double cuts[64];
  const std::size_t n_cuts = classes - 2;
  double* cut = n_cuts <= 64 ? cuts : nullptr;
  std::vector<double> heap_cuts;
  if (cut == nullptr) {
    heap_cuts.resize(n_cuts);
    cut = heap_cuts.data();
  }
  for (std::size_t i = 0; i < n_cuts; ++i) {
    const double c = u * rng.uniform01();
    std::size_t j = i;
    while (j > 0 && cut[j - 1] > c) {
      cut[j] = cut[j - 1];
      --j;
    }
    cut[j] = c;
  }
  double prev = 0.0;
  std::size_t next_cut = 0;
  for (std::size_t y = 0; y < classes; ++y) {
    if (y == label) continue;
    const double edge = next_cut < n_cuts ? cut[next_cut] : u;
    probs[y] = edge - prev;
    prev = edge;
    ++next_cut;
  }
  return label;
}

namespace {

// Reusable per-worker buffers.
struct TrialScratch {
  std::vector<double> probs;
  std::vector<double> scores;
  std::vector<std::size_t> permutation;  // identity between trials
};

class Sampler {
 public:
  Sampler(const SimulationConfig& config, const ScoreSource& source, TrialScratch& scratch,
          Xoshiro256& rng)
      : config_(config), source_(source), scratch_(scratch), rng_(rng) {}

  // Returns the label and a view of the probabilities of the next draw.
  std::pair<std::size_t, std::span<const double>> next() {
    if (source_.kind == SourceKind::kSyntheticUniform) {
      const std::size_t label = synthetic_uniform_draw(rng_, scratch_.probs);
      return {label, scratch_.probs};
    }
    const ProbabilityRecord& row = source_.pool[next_pool_index()];
    return {*row.label, row.probs};
  }

  // Puts the permutation back to identity after a without-replacement trial.
  void restore() {
    for (std::size_t i = swaps_.size(); i-- > 0;) {
      std::swap(scratch_.permutation[i], scratch_.permutation[swaps_[i]]);
    }
    swaps_.clear();
  }

 private:
  std::size_t next_pool_index() {
    const std::size_t n = source_.pool.size();
    if (config_.sampling == SamplingMode::kWithReplacement) {
      return static_cast<std::size_t>(rng_.uniform_index(n));
    }
    // Partial Fisher-Yates: position i receives a uniform pick from [i, n).
    auto& perm = scratch_.permutation;
    const std::size_t i = swaps_.size();
    const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(n - i));
    std::swap(perm[i], perm[j]);
    swaps_.push_back(j);
    return perm[i];
  }

  const SimulationConfig& config_;
  const ScoreSource& source_;
  TrialScratch& scratch_;
  Xoshiro256& rng_;
  std::vector<std::size_t> swaps_;
};

void check_compatible(const SimulationConfig& config, const ScoreSource& source) {
  config.validate();
  if (source.kind == SourceKind::kSyntheticUniform) {
    LabelSpace::of(source.synthetic_classes);
    return;
  }
  if (source.pool.empty()) throw InputError("score pool is empty");
  if (config.sampling == SamplingMode::kWithoutReplacement &&
      source.pool.size() < config.m + config.eval_size) {
    throw InputError("pool has " + std::to_string(source.pool.size()) +
                     " rows; without-replacement sampling needs m + eval = " +
                     std::to_string(config.m + config.eval_size));
  }
}

TrialScratch make_scratch(const ScoreSource& source, const SimulationConfig& config) {
  TrialScratch s;
  s.probs.resize(source.label_space().num_classes);
  s.scores.reserve(config.m);
  if (source.kind == SourceKind::kEmpiricalPool &&
      config.sampling == SamplingMode::kWithoutReplacement) {
    s.permutation.resize(source.pool.size());
    std::iota(s.permutation.begin(), s.permutation.end(), std::size_t{0});
  }
  return s;
}

TrialResult run_trial_with(const SimulationConfig& config, const ScoreSource& source,
                           std::size_t trial_index, TrialScratch& scratch) {
  TrialResult result;
  result.trial_index = trial_index;
  result.trial_seed = derive_trial_seed(config.seed, trial_index);

  Xoshiro256 rng(result.trial_seed);
  Sampler sampler(config, source, scratch, rng);

  scratch.scores.clear();
  for (std::size_t i = 0; i < config.m; ++i) {
    const auto [label, probs] = sampler.next();
    scratch.scores.push_back(conformity_score(probs, label));
  }
  const CalibratedPredictor predictor =
      calibrate(scratch.scores, config.alpha, source.label_space());

  CoverageAccumulator acc(predictor);
  for (std::size_t i = 0; i < config.eval_size; ++i) {
    const auto [label, probs] = sampler.next();
    acc.add(probs, label);
  }
  sampler.restore();

  const CoverageReport cov = acc.report();
  result.covered = cov.covered;
  result.conditional_coverage = cov.empirical_coverage;
  result.mean_set_size = cov.mean_set_size;
  result.cover_all = predictor.q_hat.is_cover_all();
  return result;
}

}  // namespace

TrialResult run_trial(const SimulationConfig& config, const ScoreSource& source,
                      std::size_t trial_index) {
  check_compatible(config, source);
  TrialScratch scratch = make_scratch(source, config);
  return run_trial_with(config, source, trial_index, scratch);
}

SimulationReport run_simulation(const SimulationConfig& config, const ScoreSource& source,
                                const RunOptions& options) {
  check_compatible(config, source);

  const std::uint64_t draws_per_trial = config.m + config.eval_size;
  if (draws_per_trial > options.max_draws / config.trials) {
    throw ExecutionError("simulation exceeds the draw budget of " +
                             std::to_string(options.max_draws),
                         0, config.trials);
  }

  std::vector<TrialResult> trials(config.trials);
  std::size_t workers = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  workers = std::clamp<std::size_t>(workers, 1, config.trials);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    try {
      TrialScratch scratch = make_scratch(source, config);
      for (std::size_t j = next.fetch_add(1); j < config.trials; j = next.fetch_add(1)) {
        trials[j] = run_trial_with(config, source, j, scratch);
        completed.fetch_add(1, std::memory_order_relaxed);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(config.trials);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::bad_alloc&) {
      throw ExecutionError("out of memory during simulation", completed.load(), config.trials);
    }
  }

  SimulationReport report;
  report.config = config;
  report.source_kind = source.kind;
  report.num_classes = source.label_space().num_classes;
  report.pool_size = source.kind == SourceKind::kEmpiricalPool ? source.pool.size() : 0;

  const double M = static_cast<double>(config.trials);
  std::vector<double> coverages;
  coverages.reserve(config.trials);
  double sum = 0.0;
  double set_sum = 0.0;
  std::size_t below = 0;
  for (const auto& t : trials) {
    coverages.push_back(t.conditional_coverage);
    sum += t.conditional_coverage;
    set_sum += t.mean_set_size;
    below += t.conditional_coverage < config.shortfall_threshold ? 1 : 0;
    report.cover_all_trials += t.cover_all ? 1 : 0;
  }
  report.mean_coverage = sum / M;
  report.mean_set_size = set_sum / M;
  if (config.trials > 1) {
    double ss = 0.0;
    for (double c : coverages) ss += (c - report.mean_coverage) * (c - report.mean_coverage);
    report.mean_coverage_std_error = std::sqrt(ss / (M - 1.0) / M);
  }
  report.shortfall_fraction = static_cast<double>(below) / M;
  report.shortfall_std_error =
      std::sqrt(report.shortfall_fraction * (1.0 - report.shortfall_fraction) / M);
  report.histogram = build_histogram(coverages, config.histogram_bins);
  report.marginal_coverage = marginal_coverage_exact(config.m, config.alpha);
  if (source.kind == SourceKind::kSyntheticUniform) {
    report.analytic_law = coverage_law(config.m, config.alpha);
    report.analytic_shortfall =
        shortfall_probability(*report.analytic_law, config.shortfall_threshold);
  }
  report.trials = std::move(trials);
  return report;
}

}  // namespace confcov
