#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "confcov/special.hpp"
#include "oracles/oracles.hpp"

namespace confcov::special {
namespace {

using oracle::relative_error;

TEST(BinomialPmf, EdgeCases) {
  EXPECT_EQ(binomial_pmf(0, 10, 0.0), 1.0);
  EXPECT_EQ(binomial_pmf(1, 10, 0.0), 0.0);
  EXPECT_EQ(binomial_pmf(10, 10, 1.0), 1.0);
  EXPECT_EQ(binomial_pmf(11, 10, 0.5), 0.0);
  EXPECT_NEAR(binomial_pmf(0, 10, 0.15), std::pow(0.85, 10), 1e-16);
  EXPECT_NEAR(binomial_pmf(5, 10, 0.5), 252.0 / 1024.0, 1e-16);
}

TEST(BinomialCdf, MatchesDirectSummation) {
  const double ps[] = {0.001, 0.01, 0.05, 0.1, 0.15, 0.3, 0.5, 0.7, 0.95};
  for (std::int64_t n : {1, 2, 5, 10, 37, 100, 250, 500}) {
    for (double p : ps) {
      for (std::int64_t t = -1; t <= n; ++t) {
        const long double expected = oracle::binomial_cdf_direct(t, n, p);
        const double got = binomial_cdf(t, static_cast<std::uint64_t>(n), p);
        if (expected < 1e-280L) {
          EXPECT_LT(got, 1e-270);
          continue;
        }
        ASSERT_LT(relative_error(got, static_cast<double>(expected)), 1e-12)
            << "n=" << n << " p=" << p << " t=" << t;
      }
    }
  }
}

TEST(BinomialSf, MatchesDirectSummation) {
  for (std::int64_t n : {1, 3, 10, 50, 200}) {
    for (double p : {0.02, 0.15, 0.5, 0.85, 0.99}) {
      for (std::int64_t s = 0; s <= n + 1; ++s) {
        const long double expected = oracle::binomial_sf_direct(s, n, p);
        const double got = binomial_sf(s, static_cast<std::uint64_t>(n), p);
        if (expected < 1e-280L) continue;
        ASSERT_LT(relative_error(got, static_cast<double>(expected)), 1e-12)
            << "n=" << n << " p=" << p << " s=" << s;
      }
    }
  }
}

// References computed offline with 60-digit arithmetic at the exact binary
// value of p.
TEST(BinomialCdf, LargeNReferenceValues) {
  struct Case {
    std::int64_t t;
    std::uint64_t n;
    double p;
    double expected;
  };
  const Case cases[] = {
      {99999, 1000000, 0.1001, 0.3690174350549361218969174},
      {99999, 1000000, 0.1, 0.4995124039243492695692606},
      {200, 1000, 0.2, 0.5189114355587429666031916},
      {150, 1000, 0.2, 2.644338190898302280309148e-05},
      {10, 100000, 0.0002, 0.01080590315999013096222312},
      {0, 1000000, 0.000001, 0.3678792572316451109330458},
      {49, 500, 0.2, 4.952291837661290683650484e-10},
      {5, 60, 0.3, 5.001999194548415857177639e-05},
  };
  for (const auto& c : cases) {
    EXPECT_LT(relative_error(binomial_cdf(c.t, c.n, c.p), c.expected), 1e-12)
        << "t=" << c.t << " n=" << c.n << " p=" << c.p;
  }
}

TEST(BetaCdfInteger, MatchesBoostIbeta) {
  for (std::uint64_t a : {1u, 2u, 5u, 10u, 46u, 181u, 450u}) {
    for (std::uint64_t b : {1u, 2u, 5u, 20u, 50u}) {
      for (double x : {0.01, 0.2, 0.5, 0.8, 0.85, 0.9, 0.99}) {
        const double expected = boost::math::ibeta(static_cast<double>(a), static_cast<double>(b), x);
        if (expected < 1e-280) continue;
        EXPECT_LT(relative_error(beta_cdf_integer(x, a, b), expected), 1e-12)
            << "a=" << a << " b=" << b << " x=" << x;
      }
    }
  }
}

TEST(BetaCdfInteger, Boundaries) {
  EXPECT_EQ(beta_cdf_integer(0.0, 3, 4), 0.0);
  EXPECT_EQ(beta_cdf_integer(1.0, 3, 4), 1.0);
  EXPECT_NEAR(beta_cdf_integer(0.85, 10, 1), std::pow(0.85, 10), 1e-16);
  EXPECT_NEAR(beta_cdf_integer(0.3, 1, 1), 0.3, 1e-16);
}

TEST(ContinuedFraction, AgreesWithBinomialSumOnIntegerShapes) {
  for (std::uint64_t m = 1; m <= 500; m += 7) {
    for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.3}) {
      const auto l = static_cast<std::uint64_t>(std::floor(alpha * static_cast<double>(m + 1)));
      if (l == 0) continue;
      const std::uint64_t a = m + 1 - l;
      for (double eps : {0.01, 0.05, 0.1, 0.2}) {
        const double x = 1.0 - alpha - eps;
        if (x <= 0.0) continue;
        const double sum = beta_cdf_integer(x, a, l);
        const double cf = incomplete_beta_continued_fraction(x, static_cast<double>(a),
                                                             static_cast<double>(l));
        if (sum < 1e-290) continue;
        EXPECT_LT(relative_error(cf, sum), 1e-10) << "m=" << m << " alpha=" << alpha << " x=" << x;
      }
    }
  }
}

TEST(ContinuedFraction, MatchesBoostOnRealShapes) {
  for (double a : {0.5, 0.9, 2.5, 30.0}) {
    for (double b : {0.5, 1.7, 12.0}) {
      for (double x : {0.05, 0.4, 0.6, 0.95}) {
        EXPECT_LT(relative_error(incomplete_beta_continued_fraction(x, a, b),
                                 boost::math::ibeta(a, b, x)),
                  1e-11);
      }
    }
  }
}

TEST(StirlingError, MatchesLgammaDefinition) {
  for (double n : {1.0, 2.0, 7.0, 15.0, 16.0, 36.0, 81.0, 501.0}) {
    const long double nl = n;
    const long double direct = std::lgamma(nl + 1.0L) - (nl + 0.5L) * std::log(nl) + nl -
                               0.918938533204672741780329736405617639861L;
    EXPECT_LT(relative_error(stirling_error(n), static_cast<double>(direct)), 1e-11) << n;
  }
}

}  // namespace
}  // namespace confcov::special
