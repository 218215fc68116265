#pragma once

// Split conformal prediction over per-class probability records.
//
// A calibration set of m labeled records is reduced to conformity scores
// (LAC: s = 1 - p[label]); the threshold q_hat is the k-th smallest score with
// k = ceil((1 - alpha)(m + 1)). When k > m no finite threshold exists and the
// predictor covers every class (Threshold::cover_all()).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace confcov {

struct LabelSpace {
  std::size_t num_classes = 0;

  // Throws InputError unless num_classes >= 2.
  static LabelSpace of(std::size_t num_classes);

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;
};

struct ProbabilityRecord {
  std::string id;
  std::optional<std::size_t> label;
  std::vector<double> probs;

  friend bool operator==(const ProbabilityRecord&, const ProbabilityRecord&) = default;
};

inline constexpr double kProbabilitySumTolerance = 1e-6;

// Throws InputError if the record does not belong to `space`: wrong width,
// entries outside [0, 1], sum further than kProbabilitySumTolerance from 1,
// or a label >= num_classes.
void validate_record(const ProbabilityRecord& record, LabelSpace space);

enum class ScoreFunction {
  kLac,
};

// "lac" -> kLac; anything else is a ConfigError.
ScoreFunction parse_score_function(std::string_view name);
std::string_view to_string(ScoreFunction fn);

// Conformity score of `class_index` for a probability vector.
double conformity_score(std::span<const double> probs, std::size_t class_index,
                        ScoreFunction fn = ScoreFunction::kLac);

double score_record(const ProbabilityRecord& record, std::size_t class_index,
                    ScoreFunction fn = ScoreFunction::kLac);

// Calibrated threshold, or the explicit "cover every class" sentinel.
class Threshold {
 public:
  static Threshold cover_all() { return Threshold(); }
  static Threshold at(double q_hat);

  bool is_cover_all() const noexcept { return cover_all_; }
  // Precondition: !is_cover_all().
  double value() const noexcept { return value_; }

  bool admits(double score) const noexcept { return cover_all_ || score <= value_; }

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  Threshold() = default;
  bool cover_all_ = true;
  double value_ = 0.0;
};

// 1-based rank k = ceil((1 - alpha)(m + 1)) of the calibration order
// statistic used as threshold. May exceed m (cover-all regime).
std::size_t conformal_rank(std::size_t m, double alpha);

// l = floor(alpha (m + 1)), the number of calibration ranks above k; k = m + 1 - l.
// alpha (m + 1) is snapped to the nearest integer when within 1e-12 of it so
// that products like 0.1 * 10 floor to 1 rather than 0.
std::size_t excluded_rank_count(std::size_t m, double alpha);

struct CalibratedPredictor {
  double alpha = 0.1;
  std::size_t m = 0;
  LabelSpace labels;
  ScoreFunction score_fn = ScoreFunction::kLac;
  Threshold q_hat = Threshold::cover_all();
  // Duplicate calibration scores were seen; exactness of the coverage law
  // assumes tie-free scores.
  bool ties_warning = false;

  friend bool operator==(const CalibratedPredictor&, const CalibratedPredictor&) = default;
};

void validate_alpha(double alpha);

// Threshold from raw calibration scores. Throws InputError for an empty list,
// a non-finite score, or alpha outside (0, 1).
CalibratedPredictor calibrate(std::span<const double> cal_scores, double alpha,
                              LabelSpace labels,
                              ScoreFunction fn = ScoreFunction::kLac);

// Adds reflected uniform noise in [-magnitude, magnitude] to each score,
// keeping results inside [0, 1]. Deterministic in `seed`.
std::vector<double> jitter_scores(std::span<const double> scores, double magnitude,
                                  std::uint64_t seed);

inline constexpr double kDefaultJitter = 1e-9;

struct CalibrationOptions {
  ScoreFunction score_fn = ScoreFunction::kLac;
  // Break ties with reflected uniform noise of this magnitude.
  std::optional<double> jitter;
  std::uint64_t jitter_seed = 0;
};

// Scores each labeled record at its true label and calibrates. Every record
// must carry a label.
CalibratedPredictor calibrate_records(std::span<const ProbabilityRecord> records,
                                      double alpha, LabelSpace labels,
                                      const CalibrationOptions& options = {});

struct PredictionSet {
  std::vector<std::size_t> labels;  // ascending

  std::size_t set_size() const noexcept { return labels.size(); }
  bool contains(std::size_t label) const;
};

PredictionSet predict_set(std::span<const double> probs, const CalibratedPredictor& predictor);
PredictionSet predict_set(const ProbabilityRecord& record, const CalibratedPredictor& predictor);

// Adds the lowest-score class to an empty set; non-empty sets are unchanged.
// Returns true if a class was added.
bool force_nonempty(PredictionSet& set, std::span<const double> probs,
                    const CalibratedPredictor& predictor);

struct CoverageReport {
  std::size_t n_eval = 0;
  std::size_t covered = 0;
  double empirical_coverage = 0.0;
  double mean_set_size = 0.0;
};

// Streaming form of evaluate_coverage for callers that generate records on
// the fly and do not want to materialize them.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(const CalibratedPredictor& predictor) : predictor_(&predictor) {}

  // Precondition: probs has predictor.labels.num_classes entries, label in range.
  void add(std::span<const double> probs, std::size_t label) noexcept;

  std::size_t count() const noexcept { return n_; }
  CoverageReport report() const;

 private:
  const CalibratedPredictor* predictor_;
  std::size_t n_ = 0;
  std::size_t covered_ = 0;
  std::size_t total_set_size_ = 0;
};

// Empirical coverage of `predictor` on labeled records. Throws InputError on
// an empty list, an unlabeled record, or a record from another label space.
CoverageReport evaluate_coverage(std::span<const ProbabilityRecord> records,
                                 const CalibratedPredictor& predictor);

}  // namespace confcov
