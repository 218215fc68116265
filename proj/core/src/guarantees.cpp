#include "confcov/guarantees.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confcov/conformal.hpp"
#include "confcov/error.hpp"
#include "confcov/special.hpp"

namespace confcov {

void GuaranteeQuery::validate() const {
  if (m < 1) throw InputError("calibration size m must be at least 1");
  validate_alpha(alpha);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("epsilon must be positive and finite");
  }
}

double GuaranteeQuery::alpha_tilde() const { return std::min(alpha + epsilon, 1.0); }

long long vovk_cdf_index(std::size_t m, double alpha) {
  return static_cast<long long>(excluded_rank_count(m, alpha)) - 1;
}

double vovk_delta(const GuaranteeQuery& q) {
  q.validate();
  const long long t = vovk_cdf_index(q.m, q.alpha);
  if (t < 0) return 0.0;
  const double p = q.alpha_tilde();
  // Binomial(m, 1) puts all mass on m > t.
  if (p >= 1.0) return 0.0;
  return special::binomial_cdf(t, q.m, p);
}

double CoverageLaw::mean() const {
  if (degenerate) return 1.0;
  return static_cast<double>(a) / static_cast<double>(m + 1);
}

double CoverageLaw::cdf(double x) const {
  if (degenerate) return x >= 1.0 ? 1.0 : 0.0;
  return special::beta_cdf_integer(x, a, b);
}

CoverageLaw coverage_law(std::size_t m, double alpha) {
  if (m < 1) throw InputError("calibration size m must be at least 1");
  validate_alpha(alpha);
  CoverageLaw law;
  law.m = m;
  law.alpha = alpha;
  const std::size_t l = excluded_rank_count(m, alpha);
  law.degenerate = l == 0;
  if (!law.degenerate) {
    law.a = m + 1 - l;
    law.b = l;
  }
  return law;
}

double shortfall_probability(const CoverageLaw& law, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InputError("shortfall threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  if (law.degenerate) return 0.0;
  return special::beta_cdf_integer(threshold, law.a, law.b);
}

double marginal_coverage_exact(std::size_t m, double alpha) {
  if (m < 1) throw InputError("calibration size m must be at least 1");
  validate_alpha(alpha);
  const std::size_t k = std::min(conformal_rank(m, alpha), m + 1);
  return static_cast<double>(k) / static_cast<double>(m + 1);
}

void PlanSpec::validate() const {
  validate_alpha(alpha);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("epsilon must be positive and finite");
  }
  if (!(delta_target > 0.0 && delta_target <= 1.0)) {
    throw InputError("delta target must lie in (0, 1]");
  }
  if (m_max < 1) throw InputError("m_max must be at least 1");
}

PlanResult plan_min_m(const PlanSpec& spec) {
  spec.validate();
  PlanResult result;
  result.scanned_up_to = spec.m_max;
  for (std::size_t m = 1; m <= spec.m_max; ++m) {
    if (excluded_rank_count(m, spec.alpha) == 0) continue;
    const double delta = vovk_delta({m, spec.alpha, spec.epsilon});
    if (delta <= spec.delta_target) {
      result.found = true;
      result.m_min = m;
      result.delta_at_m_min = delta;
      result.scanned_up_to = m;
      break;
    }
  }
  return result;
}

}  // namespace confcov
