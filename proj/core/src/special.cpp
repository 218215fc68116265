#include "confcov/special.hpp"

#include <cmath>
#include <limits>

namespace confcov::special {

namespace {

constexpr double kLn2Pi = 1.837877066409345483560659472811;  // log(2 pi)
constexpr long double kLnSqrt2PiL = 0.918938533204672741780329736405617639861L;

// sum_{j >= 0} r_j with r_0 = 1 and r_{j+1} = r_j * ratio(j); stops once a term
// no longer changes the sum. `ratio` must eventually fall below 1.
template <typename Ratio>
double geometric_like_sum(std::uint64_t steps, Ratio ratio) {
  double sum = 1.0;
  double term = 1.0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    term *= ratio(i);
    const double next = sum + term;
    if (next == sum) break;
    sum = next;
  }
  return sum;
}

// P(X <= t) summed from t downwards. Intended for t at or below the mean.
double lower_tail_direct(std::uint64_t t, std::uint64_t n, double p) {
  const double log_top = log_binomial_pmf(t, n, p);
  if (log_top == -std::numeric_limits<double>::infinity()) return 0.0;
  const double odds = (1.0 - p) / p;
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  const double sum = geometric_like_sum(t, [&](std::uint64_t i) {
    const double j = td - static_cast<double>(i);  // pmf(j - 1) / pmf(j)
    return j / (nd - j + 1.0) * odds;
  });
  return std::exp(log_top + std::log(sum));
}

// P(X >= s) summed from s upwards. Intended for s at or above the mean.
double upper_tail_direct(std::uint64_t s, std::uint64_t n, double p) {
  const double log_bottom = log_binomial_pmf(s, n, p);
  if (log_bottom == -std::numeric_limits<double>::infinity()) return 0.0;
  const double odds = p / (1.0 - p);
  const double nd = static_cast<double>(n);
  const double sd = static_cast<double>(s);
  const double sum = geometric_like_sum(n - s, [&](std::uint64_t i) {
    const double j = sd + static_cast<double>(i);  // pmf(j + 1) / pmf(j)
    return (nd - j) / (j + 1.0) * odds;
  });
  return std::exp(log_bottom + std::log(sum));
}

}  // namespace

double stirling_error(double n) {
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;

  if (n <= 0.0) return 0.0;
  if (n <= 15.0) {
    // Extended precision keeps the cancellation below 1e-15 relative.
    const long double nl = n;
    return static_cast<double>(std::lgamma(nl + 1.0L) - (nl + 0.5L) * std::log(nl) + nl -
                               kLnSqrt2PiL);
  }
  const double nn = n * n;
  if (n > 500.0) return (s0 - s1 / nn) / n;
  if (n > 80.0) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35.0) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

double binomial_deviance(double x, double np) {
  if (std::abs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (k > n) return kNegInf;
  if (p <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return k == n ? 0.0 : kNegInf;

  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  if (k == 0) return nd * std::log1p(-p);
  if (k == n) return nd * std::log(p);

  const double kd = static_cast<double>(k);
  const double rest = nd - kd;
  const double lc = stirling_error(nd) - stirling_error(kd) - stirling_error(rest) -
                    binomial_deviance(kd, nd * p) - binomial_deviance(rest, nd * q);
  const double lf = kLn2Pi + std::log(kd) + std::log1p(-kd / nd);
  return lc - 0.5 * lf;
}

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  return std::exp(log_binomial_pmf(k, n, p));
}

double binomial_cdf(std::int64_t t, std::uint64_t n, double p) {
  if (t < 0) return 0.0;
  const auto tu = static_cast<std::uint64_t>(t);
  if (tu >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  if (static_cast<double>(tu) <= static_cast<double>(n) * p) return lower_tail_direct(tu, n, p);
  return 1.0 - upper_tail_direct(tu + 1, n, p);
}

double binomial_sf(std::int64_t s, std::uint64_t n, double p) {
  if (s <= 0) return 1.0;
  const auto su = static_cast<std::uint64_t>(s);
  if (su > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  if (static_cast<double>(su) >= static_cast<double>(n) * p) return upper_tail_direct(su, n, p);
  return 1.0 - lower_tail_direct(su - 1, n, p);
}

double beta_cdf_integer(double x, std::uint64_t a, std::uint64_t b) {
  if (!(x > 0.0)) return 0.0;
  if (x >= 1.0) return 1.0;
  return binomial_sf(static_cast<std::int64_t>(a), a + b - 1, x);
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIterations = 200000;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double m = i;
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta_continued_fraction(double x, double a, double b) {
  if (!(x > 0.0)) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace confcov::special
