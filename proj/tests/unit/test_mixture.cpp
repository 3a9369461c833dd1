#include "sphtest/mixture.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "sphtest/error.hpp"

namespace sphtest {
namespace {

TEST(Ncx2, MatchesBoostDistribution) {
  for (double df : {1.0, 3.0, 5.0, 7.0, 20.0}) {
    for (double xi : {0.0, 0.1, 1.0, 3.0, 10.0, 50.0, 300.0}) {
      for (double x : {0.5, 2.0, 7.814728, 15.0, 40.0, 120.0, 400.0}) {
        double cdf, sf;
        if (xi == 0) {
          const boost::math::chi_squared d(df);
          cdf = boost::math::cdf(d, x);
          sf = boost::math::cdf(boost::math::complement(d, x));
        } else {
          const boost::math::non_central_chi_squared d(df, xi);
          cdf = boost::math::cdf(d, x);
          sf = boost::math::cdf(boost::math::complement(d, x));
        }
        EXPECT_NEAR(ncx2_cdf(df, xi, x), cdf, 1e-10) << df << " " << xi << " " << x;
        EXPECT_NEAR(ncx2_sf(df, xi, x), sf, 1e-10) << df << " " << xi << " " << x;
        if (sf > 1e-200) {
          EXPECT_NEAR(ncx2_sf(df, xi, x) / sf, 1.0, 1e-8) << df << " " << xi << " " << x;
        }
      }
    }
  }
}

TEST(Ncx2, DocumentedValues) {
  EXPECT_NEAR(ncx2_upper_quantile(3, 0, 0.05), 7.814728, 1e-6);
  EXPECT_NEAR(ncx2_upper_quantile(5, 0, 0.05), 11.0705, 1e-4);
  // Rayleigh asymptotic powers at p = 3 (reference values from an
  // arbitrary-precision Poisson series).
  EXPECT_NEAR(ncx2_sf(3, 3, 7.814728), 0.274639608542527, 1e-12);
  EXPECT_NEAR(ncx2_sf(3, 1, 7.8147), 0.115659943690353, 1e-12);
  const boost::math::non_central_chi_squared d(4, 2.5);
  EXPECT_NEAR(ncx2_upper_quantile(4, 2.5, 0.1), boost::math::quantile(boost::math::complement(d, 0.1)), 1e-8);
  EXPECT_THROW(ncx2_cdf(0, 1, 1), DomainError);
  EXPECT_THROW(ncx2_cdf(3, -1, 1), DomainError);
  EXPECT_THROW(ncx2_upper_quantile(3, 0, 1.0), DomainError);
}

TEST(MixtureLaw, SingleTermMonteCarloAgreesWithSeries) {
  const std::vector<MixtureTerm> cases{{1, 1.0, 3, 0.0}, {2, 1.0, 5, 0.0}, {3, 2.0, 7, 0.0},
                                       {1, 1.0, 3, 3.0}, {2, 0.5, 5, 12.0}, {6, 1.0, 13, 0.7}};
  for (const auto& term : cases) {
    const MixtureLaw law(3, {term});
    for (double alpha : {0.01, 0.05, 0.1, 0.5}) {
      const auto exact = law.quantile(alpha);
      const auto mc = law.quantile_mc(alpha);
      EXPECT_EQ(exact.se, 0.0);
      EXPECT_GT(mc.se, 0.0);
      EXPECT_NEAR(mc.value, exact.value, 3 * mc.se) << law.describe() << " alpha=" << alpha;
      const auto tail = law.tail_mc(exact.value);
      EXPECT_NEAR(tail.value, alpha, 3 * tail.se) << law.describe();
    }
  }
}

TEST(MixtureLaw, QuantileMonotoneInAlpha) {
  const MixtureLaw law(3, {{1, 1.0, 3, 0.0}, {2, 0.5, 5, 1.0}});
  double prev = law.quantile(0.001).value;
  for (double alpha : {0.01, 0.05, 0.1, 0.3, 0.7, 0.95}) {
    const double q = law.quantile(alpha).value;
    EXPECT_LT(q, prev);
    prev = q;
  }
}

TEST(MixtureLaw, ScalesLinearlyWithWeights) {
  const MixtureLaw base(3, {{1, 1.0, 3, 0.0}, {2, 0.5, 5, 0.0}});
  const MixtureLaw scaled(3, {{1, 4.0, 3, 0.0}, {2, 2.0, 5, 0.0}});
  const double q = base.quantile(0.05).value;
  EXPECT_NEAR(scaled.quantile(0.05).value, 4.0 * q, 1e-13 * q);
}

TEST(MixtureLaw, MultiTermMeanMatches) {
  // E[sum w (chi2_d(xi))] = sum w (d + xi)
  const MixtureLaw law(3, {{1, 1.0, 3, 2.0}, {2, 0.25, 5, 0.0}, {3, 0.1, 7, 5.0}});
  const auto s = law.sample();
  double mean = 0, sq = 0;
  for (double x : s) {
    mean += x;
    sq += x * x;
  }
  mean /= s.size();
  const double se = std::sqrt((sq / s.size() - mean * mean) / s.size());
  EXPECT_NEAR(mean, 1.0 * 5 + 0.25 * 5 + 0.1 * 12, 4 * se);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
}

TEST(MixtureLaw, DeterministicAndValidated) {
  const MixtureLaw a(3, {{1, 1.0, 3, 0.0}, {2, 1.0, 5, 0.0}}, 0.0, 200000, 5);
  const MixtureLaw b(3, {{1, 1.0, 3, 0.0}, {2, 1.0, 5, 0.0}}, 0.0, 200000, 5);
  EXPECT_EQ(a.quantile(0.05).value, b.quantile(0.05).value);
  EXPECT_EQ(a.describe(), "1*chi2_3(0)+1*chi2_5(0)");
  EXPECT_THROW(MixtureLaw(3, {}), DomainError);
  EXPECT_THROW(MixtureLaw(3, {{1, 0.0, 3, 0.0}}), DomainError);
  EXPECT_THROW(MixtureLaw(3, {{1, 1.0, 3, -1.0}}), DomainError);
  EXPECT_THROW(MixtureLaw(3, {{1, 1.0, 3, 0.0}}, 0.0, 1000), DomainError);
}

}  // namespace
}  // namespace sphtest
