#pragma once

// Exact analytics for split-conformal guarantees with m calibration scores.
//
// With tie-free exchangeable scores the coverage of a predictor calibrated on
// one fixed calibration set is itself random across calibration draws, with
// law Beta(m + 1 - l, l), l = floor((m + 1) alpha). Its lower tail at
// 1 - alpha - epsilon coincides with Vovk's (epsilon, delta) bound
//   delta = P(Binomial(m, alpha + epsilon) <= floor(alpha (m + 1) - 1)).
//
// vovk_delta returns the smallest admissible delta; any larger delta is also
// a valid guarantee.

#include <cstddef>
#include <optional>

namespace confcov {

struct GuaranteeQuery {
  std::size_t m = 1;
  double alpha = 0.1;
  double epsilon = 0.05;

  // Throws InputError unless m >= 1, alpha in (0, 1), epsilon > 0 and finite.
  void validate() const;
  // alpha + epsilon clamped to 1, used as the binomial success probability.
  double alpha_tilde() const;
};

// t = floor(alpha (m + 1) - 1), the binomial CDF evaluation point. Negative
// when the predictor is in the cover-all regime.
long long vovk_cdf_index(std::size_t m, double alpha);

double vovk_delta(const GuaranteeQuery& q);

struct CoverageLaw {
  std::size_t m = 0;
  double alpha = 0.0;
  std::size_t a = 0;  // m + 1 - l
  std::size_t b = 0;  // l
  bool degenerate = true;  // l == 0: point mass at coverage 1

  double mean() const;
  // P(coverage <= x).
  double cdf(double x) const;
};

CoverageLaw coverage_law(std::size_t m, double alpha);

// Probability that one calibration draw yields conditional coverage below
// `threshold`. Throws InputError unless threshold in (0, 1).
double shortfall_probability(const CoverageLaw& law, double threshold);

// min(ceil((1 - alpha)(m + 1)), m + 1) / (m + 1); never below 1 - alpha.
double marginal_coverage_exact(std::size_t m, double alpha);

struct PlanSpec {
  double alpha = 0.1;
  double epsilon = 0.05;
  double delta_target = 0.1;
  std::size_t m_max = 10000;

  void validate() const;
};

struct PlanResult {
  bool found = false;
  std::optional<std::size_t> m_min;
  std::optional<double> delta_at_m_min;
  std::size_t scanned_up_to = 0;
};

// Smallest non-degenerate m <= m_max with vovk_delta <= delta_target. Linear
// scan: the floor makes delta(m) saw-toothed, so bisection would be wrong.
PlanResult plan_min_m(const PlanSpec& spec);

}  // namespace confcov
