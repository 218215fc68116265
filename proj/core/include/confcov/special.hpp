#pragma once

// Binomial and beta special functions.
//
// Binomial probabilities use Loader's saddle-point expansion
// (C. Loader, "Fast and Accurate Computation of Binomial Probabilities", 2000),
// which keeps ~1e-15 relative accuracy for n up to 1e6 and beyond where a
// naive lgamma difference loses digits to cancellation. Tail sums start at
// the term nearest the bulk and recur outward, so an underflowing edge term
// never zeroes a representable tail.

#include <cstdint>

namespace confcov::special {

// Stirling-series error term: log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)].
double stirling_error(double n);

// Deviance term  x log(x / np) + np - x,  accurate when x ~ np.
double binomial_deviance(double x, double np);

// log P(Binomial(n, p) = k). Returns -inf for impossible outcomes.
double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

// P(Binomial(n, p) <= t). Precondition: p in [0, 1].
double binomial_cdf(std::int64_t t, std::uint64_t n, double p);

// P(Binomial(n, p) >= s).
double binomial_sf(std::int64_t s, std::uint64_t n, double p);

// Regularized incomplete beta I_x(a, b) for positive integer shapes through
// the identity I_x(a, b) = P(Binomial(a + b - 1, x) >= a).
double beta_cdf_integer(double x, std::uint64_t a, std::uint64_t b);

// Regularized incomplete beta I_x(a, b) for real a, b > 0 via the modified
// Lentz continued fraction. Independent of the binomial-sum route above.
double incomplete_beta_continued_fraction(double x, double a, double b);

}  // namespace confcov::special
