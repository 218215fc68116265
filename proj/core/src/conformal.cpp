#include "confcov/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confcov/error.hpp"
#include "confcov/rng.hpp"

namespace confcov {

LabelSpace LabelSpace::of(std::size_t num_classes) {
  if (num_classes < 2) {
    throw InputError("label space needs at least 2 classes, got " + std::to_string(num_classes));
  }
  return LabelSpace{num_classes};
}

void validate_record(const ProbabilityRecord& record, LabelSpace space) {
  if (record.probs.size() != space.num_classes) {
    throw InputError("record '" + record.id + "' has " + std::to_string(record.probs.size()) +
                     " probabilities, label space has " + std::to_string(space.num_classes));
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < record.probs.size(); ++c) {
    const double p = record.probs[c];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InputError("record '" + record.id + "': p_" + std::to_string(c) + " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw InputError("record '" + record.id + "': probabilities sum to " + std::to_string(sum));
  }
  if (record.label && *record.label >= space.num_classes) {
    throw InputError("record '" + record.id + "': label " + std::to_string(*record.label) +
                     " out of range");
  }
}

ScoreFunction parse_score_function(std::string_view name) {
  if (name == "lac") return ScoreFunction::kLac;
  throw ConfigError("unknown score function '" + std::string(name) + "'");
}

std::string_view to_string(ScoreFunction fn) {
  switch (fn) {
    case ScoreFunction::kLac:
      return "lac";
  }
  return "?";
}

double conformity_score(std::span<const double> probs, std::size_t class_index,
                        ScoreFunction fn) {
  if (class_index >= probs.size()) {
    throw InputError("class index " + std::to_string(class_index) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  switch (fn) {
    case ScoreFunction::kLac:
      return 1.0 - probs[class_index];
  }
  throw ConfigError("unsupported score function");
}

double score_record(const ProbabilityRecord& record, std::size_t class_index, ScoreFunction fn) {
  return conformity_score(record.probs, class_index, fn);
}

Threshold Threshold::at(double q_hat) {
  if (!std::isfinite(q_hat)) throw InputError("threshold must be finite");
  Threshold t;
  t.cover_all_ = false;
  t.value_ = q_hat;
  return t;
}

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

std::size_t excluded_rank_count(std::size_t m, double alpha) {
  const double x = alpha * static_cast<double>(m + 1);
  const double nearest = std::nearbyint(x);
  const double snapped = std::abs(x - nearest) <= 1e-12 * std::max(1.0, std::abs(x)) ? nearest : x;
  return static_cast<std::size_t>(std::floor(snapped));
}

std::size_t conformal_rank(std::size_t m, double alpha) {
  // ceil((1 - a)(m + 1)) = (m + 1) - floor(a (m + 1)) for integer m + 1.
  return m + 1 - excluded_rank_count(m, alpha);
}

CalibratedPredictor calibrate(std::span<const double> cal_scores, double alpha, LabelSpace labels,
                              ScoreFunction fn) {
  validate_alpha(alpha);
  if (cal_scores.empty()) throw InputError("calibration set is empty");
  for (double s : cal_scores) {
    if (!std::isfinite(s)) throw InputError("calibration scores must be finite");
  }

  std::vector<double> sorted(cal_scores.begin(), cal_scores.end());
  std::sort(sorted.begin(), sorted.end());

  CalibratedPredictor predictor;
  predictor.alpha = alpha;
  predictor.m = sorted.size();
  predictor.labels = labels;
  predictor.score_fn = fn;
  predictor.ties_warning = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();

  const std::size_t k = conformal_rank(predictor.m, alpha);
  predictor.q_hat = k > predictor.m ? Threshold::cover_all() : Threshold::at(sorted[k - 1]);
  return predictor;
}

std::vector<double> jitter_scores(std::span<const double> scores, double magnitude,
                                  std::uint64_t seed) {
  if (!(magnitude >= 0.0 && magnitude < 0.5)) {
    throw InputError("jitter magnitude must lie in [0, 0.5)");
  }
  Xoshiro256 rng(seed);
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) {
    double v = s + magnitude * (2.0 * rng.uniform01() - 1.0);
    if (v < 0.0) v = -v;
    if (v > 1.0) v = 2.0 - v;
    out.push_back(v);
  }
  return out;
}

CalibratedPredictor calibrate_records(std::span<const ProbabilityRecord> records, double alpha,
                                      LabelSpace labels, const CalibrationOptions& options) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) {
    validate_record(r, labels);
    if (!r.label) throw InputError("calibration record '" + r.id + "' has no label");
    scores.push_back(score_record(r, *r.label, options.score_fn));
  }
  if (options.jitter) {
    scores = jitter_scores(scores, *options.jitter, options.jitter_seed);
  }
  return calibrate(scores, alpha, labels, options.score_fn);
}

bool PredictionSet::contains(std::size_t label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

PredictionSet predict_set(std::span<const double> probs, const CalibratedPredictor& predictor) {
  if (probs.size() != predictor.labels.num_classes) {
    throw InputError("record has " + std::to_string(probs.size()) + " classes, predictor expects " +
                     std::to_string(predictor.labels.num_classes));
  }
  PredictionSet set;
  for (std::size_t y = 0; y < probs.size(); ++y) {
    if (predictor.q_hat.admits(conformity_score(probs, y, predictor.score_fn))) {
      set.labels.push_back(y);
    }
  }
  return set;
}

PredictionSet predict_set(const ProbabilityRecord& record, const CalibratedPredictor& predictor) {
  return predict_set(std::span<const double>(record.probs), predictor);
}

bool force_nonempty(PredictionSet& set, std::span<const double> probs,
                    const CalibratedPredictor& predictor) {
  if (!set.labels.empty() || probs.empty()) return false;
  std::size_t best = 0;
  double best_score = conformity_score(probs, 0, predictor.score_fn);
  for (std::size_t y = 1; y < probs.size(); ++y) {
    const double s = conformity_score(probs, y, predictor.score_fn);
    if (s < best_score) {
      best = y;
      best_score = s;
    }
  }
  set.labels.push_back(best);
  return true;
}

void CoverageAccumulator::add(std::span<const double> probs, std::size_t label) noexcept {
  const auto& q = predictor_->q_hat;
  std::size_t size = 0;
  bool hit = false;
  for (std::size_t y = 0; y < probs.size(); ++y) {
    // LAC is the only score function; inlined to keep the simulation loop tight.
    if (q.admits(1.0 - probs[y])) {
      ++size;
      hit = hit || y == label;
    }
  }
  ++n_;
  covered_ += hit ? 1 : 0;
  total_set_size_ += size;
}

CoverageReport CoverageAccumulator::report() const {
  CoverageReport r;
  r.n_eval = n_;
  r.covered = covered_;
  if (n_ > 0) {
    r.empirical_coverage = static_cast<double>(covered_) / static_cast<double>(n_);
    r.mean_set_size = static_cast<double>(total_set_size_) / static_cast<double>(n_);
  }
  return r;
}

CoverageReport evaluate_coverage(std::span<const ProbabilityRecord> records,
                                 const CalibratedPredictor& predictor) {
  if (records.empty()) throw InputError("evaluation set is empty");
  CoverageAccumulator acc(predictor);
  for (const auto& r : records) {
    validate_record(r, predictor.labels);
    if (!r.label) throw InputError("evaluation record '" + r.id + "' has no label");
    acc.add(r.probs, *r.label);
  }
  return acc.report();
}

}  // namespace confcov
