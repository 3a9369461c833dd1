#include "sphtest/rotsym.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sphtest/error.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest {
namespace {

struct Moments {
  std::vector<double> mean, se;
};

// Empirical E[t^m], m = 1..4, of t = x'theta with standard errors.
Moments projection_moments(const SphericalSample& s, const std::vector<double>& theta) {
  Moments out{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)};
  std::vector<double> sq(4, 0.0);
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = s.row(i);
    double t = 0;
    for (int j = 0; j < s.dim(); ++j) t += x[j] * theta[j];
    double tm = 1;
    for (int m = 0; m < 4; ++m) {
      tm *= t;
      out.mean[m] += tm;
      sq[m] += tm * tm;
    }
  }
  for (int m = 0; m < 4; ++m) {
    out.mean[m] /= n;
    out.se[m] = std::sqrt((sq[m] / n - out.mean[m] * out.mean[m]) / n);
  }
  return out;
}

std::vector<double> pole(int p) {
  std::vector<double> e(p, 0.0);
  e[p - 1] = 1.0;
  return e;
}

TEST(AngularFunction, DerivativeRules) {
  const auto vmf = AngularFunction::vmf();
  for (int k = 0; k <= 10; ++k) EXPECT_EQ(vmf.deriv0(k), 1.0);
  const auto w = AngularFunction::watson();
  EXPECT_EQ(w.deriv0(1), 0.0);
  EXPECT_EQ(w.deriv0(2), 2.0);
  EXPECT_EQ(w.deriv0(4), 12.0);
  const auto p3 = AngularFunction::power(3);
  EXPECT_EQ(p3.deriv0(3), 6.0);
  EXPECT_EQ(p3.deriv0(6), 360.0);
  EXPECT_EQ(p3.deriv0(4), 0.0);
  const auto c = AngularFunction::cauchy();
  EXPECT_EQ(c.deriv0(1), -2.0);
  EXPECT_EQ(c.deriv0(3), -48.0);
  EXPECT_NEAR(c(0.1), 1.0 / 1.2, 1e-15);
  EXPECT_THROW(vmf.deriv0(31), DomainError);
  EXPECT_TRUE(w.symmetric());
  EXPECT_FALSE(vmf.symmetric());
}

TEST(AngularFunction, ParseAndCustom) {
  EXPECT_EQ(AngularFunction::parse("power_3").b(), 3);
  EXPECT_EQ(AngularFunction::parse("power", 4).b(), 4);
  EXPECT_EQ(AngularFunction::parse("watson").kind(), AngularFunction::Kind::watson);
  EXPECT_THROW(AngularFunction::parse("power"), DomainError);
  EXPECT_THROW(AngularFunction::parse("gauss"), DomainError);

  const auto f = AngularFunction::custom("lin", [](double s) { return 1 + s / 2; }, {1.0, 0.5});
  EXPECT_EQ(f.deriv0(1), 0.5);
  EXPECT_THROW(f.deriv0(2), DomainError);
  EXPECT_THROW(AngularFunction::custom("bad", [](double s) { return 2 + s; }, {2.0}), DomainError);
}

TEST(NormalizingConstant, DocumentedValues) {
  for (int p = 2; p <= 8; ++p) {
    for (const auto& f : {AngularFunction::vmf(), AngularFunction::cauchy(), AngularFunction::power(3)}) {
      EXPECT_NEAR(normalizing_constant(p, 0.0, f), specfun::sphere_constant(p), 1e-14);
    }
  }
  EXPECT_NEAR(normalizing_constant(3, 0.0, AngularFunction::vmf()), 0.5, 1e-15);
  EXPECT_NEAR(normalizing_constant(3, 1.0, AngularFunction::vmf()), 1.0 / (2 * std::sinh(1.0)), 1e-13);
  EXPECT_NEAR(normalizing_constant(3, 1.0, AngularFunction::vmf()), 0.425459, 1e-6);
  EXPECT_THROW(normalizing_constant(3, 0.6, AngularFunction::cauchy()), DomainError);
  EXPECT_THROW(normalizing_constant(3, -1.0, AngularFunction::vmf()), DomainError);
}

TEST(TMomentOracle, DocumentedValues) {
  for (int p = 2; p <= 6; ++p) {
    EXPECT_NEAR(t_moment_oracle(p, 0.0, AngularFunction::vmf(), 2), 1.0 / p, 1e-14);
    EXPECT_NEAR(t_moment_oracle(p, 0.7, AngularFunction::watson(), 3), 0.0, 1e-14);
  }
  // coth(1) - 1
  EXPECT_NEAR(t_moment_oracle(3, 1.0, AngularFunction::vmf(), 1), 1.0 / std::tanh(1.0) - 1.0, 1e-13);
  EXPECT_NEAR(t_moment_oracle(3, 0.1, AngularFunction::vmf(), 1), 0.1 / 3, 1e-4);
}

TEST(SampleUniform, MomentsAndDeterminism) {
  const auto s = sample_uniform(3, 100000, 5);
  const auto m = projection_moments(s, pole(3));
  EXPECT_NEAR(m.mean[1], 1.0 / 3.0, 0.005);
  const auto again = sample_uniform(3, 100000, 5);
  EXPECT_TRUE(std::equal(s.data().begin(), s.data().end(), again.data().begin()));
  const auto other = sample_uniform(3, 100000, 5, 1);
  EXPECT_FALSE(std::equal(s.data().begin(), s.data().end(), other.data().begin()));
}

TEST(SampleUniform, MeanResultantIsCalibrated) {
  // 3 n |mean|^2 is asymptotically chi^2_3 under uniformity.
  const double q999 = boost::math::quantile(boost::math::chi_squared(3), 0.999);
  int exceed = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_uniform(3, 2000, seed);
    double mx[3] = {0, 0, 0};
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (int j = 0; j < 3; ++j) mx[j] += s.row(i)[j];
    }
    const double stat = 3.0 * (mx[0] * mx[0] + mx[1] * mx[1] + mx[2] * mx[2]) / s.size();
    exceed += stat > q999;
  }
  EXPECT_LE(exceed, 2);
}

TEST(RotSymSampler, VmfMeanProjection) {
  RotSymConfig cfg{3, {}, 1.0, AngularFunction::vmf(), 17};
  const auto s = sample_rotsym(cfg, 1'000'000);
  const auto m = projection_moments(s, pole(3));
  EXPECT_NEAR(m.mean[0], 0.313035, 0.003);
}

TEST(RotSymSampler, MomentsMatchOracle) {
  struct Case {
    int p;
    double kappa;
    AngularFunction f;
  };
  const std::vector<Case> cases{{3, 0.5, AngularFunction::vmf()},
                                {3, 1.0, AngularFunction::watson()},
                                {2, 0.8, AngularFunction::power(3)},
                                {5, 2.0, AngularFunction::vmf()},
                                {4, 0.4, AngularFunction::cauchy()}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    RotSymConfig cfg{c.p, {}, c.kappa, c.f, seed++};
    const auto s = sample_rotsym(cfg, 1'000'000);
    const auto m = projection_moments(s, pole(c.p));
    for (int k = 1; k <= 4; ++k) {
      const double oracle = t_moment_oracle(c.p, c.kappa, c.f, k);
      EXPECT_NEAR(m.mean[k - 1], oracle, 4 * m.se[k - 1]) << c.f.name() << " p=" << c.p << " m=" << k;
    }
  }
}

TEST(RotSymSampler, WatsonIsAxial) {
  RotSymConfig cfg{3, {}, 2.0, AngularFunction::watson(), 23};
  const auto s = sample_rotsym(cfg, 200000);
  const auto m = projection_moments(s, pole(3));
  EXPECT_NEAR(m.mean[0], 0.0, 3 * m.se[0]);
}

TEST(RotSymSampler, GeneralLocation) {
  std::vector<double> theta{0.5, -0.5, 0.5, 0.5};
  RotSymConfig cfg{4, theta, 1.5, AngularFunction::vmf(), 31};
  const auto s = sample_rotsym(cfg, 400000);
  const auto m = projection_moments(s, theta);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_NEAR(m.mean[k - 1], t_moment_oracle(4, 1.5, cfg.f, k), 4 * m.se[k - 1]);
  }
  // The mean direction is theta.
  std::vector<double> mean(4, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int j = 0; j < 4; ++j) mean[j] += s.row(i)[j] / s.size();
  }
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(mean[j], m.mean[0] * theta[j], 5e-3);
}

TEST(RotSymSampler, TangentDirectionIsUniform) {
  // Rayleigh test on S^{p-2} for the normalized tangent component.
  for (int p : {3, 4}) {
    RotSymConfig cfg{p, {}, 1.0, AngularFunction::vmf(), 41};
    const auto s = sample_rotsym(cfg, 100000);
    std::vector<double> mean(p - 1, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto x = s.row(i);
      double r = 0;
      for (int j = 0; j < p - 1; ++j) r += x[j] * x[j];
      r = std::sqrt(r);
      for (int j = 0; j < p - 1; ++j) mean[j] += x[j] / r;
    }
    double stat = 0;
    for (double v : mean) stat += v * v;
    stat *= (p - 1.0) / s.size();
    EXPECT_LT(stat, boost::math::quantile(boost::math::chi_squared(p - 1), 0.999)) << p;
  }
}

TEST(RotSymSampler, ZeroKappaMatchesUniformLaw) {
  RotSymConfig cfg{3, {}, 0.0, AngularFunction::vmf(), 3};
  const auto s = sample_rotsym(cfg, 200000);
  const auto m = projection_moments(s, pole(3));
  EXPECT_NEAR(m.mean[0], 0.0, 4 * m.se[0]);
  EXPECT_NEAR(m.mean[1], 1.0 / 3.0, 4 * m.se[1]);
}

TEST(RotSymSampler, DeterministicAndValidated) {
  RotSymConfig cfg{3, {}, 1.0, AngularFunction::vmf(), 9};
  const auto a = sample_rotsym(cfg, 1000, 4);
  const auto b = sample_rotsym(cfg, 1000, 4);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

  RotSymConfig bad_cauchy{3, {}, 0.5, AngularFunction::cauchy(), 0};
  EXPECT_THROW(RotSymSampler{bad_cauchy}, DomainError);
  RotSymConfig bad_theta{3, {1, 1, 0}, 1.0, AngularFunction::vmf(), 0};
  EXPECT_THROW(RotSymSampler{bad_theta}, DomainError);
  RotSymConfig concentrated{10, {}, 200.0, AngularFunction::vmf(), 0};
  EXPECT_THROW(RotSymSampler{concentrated}, DomainError);
}

TEST(SphericalSample, CsvRoundTrip) {
  const auto s = sample_uniform(4, 50, 8);
  std::stringstream ss;
  s.write_csv(ss);
  const auto back = SphericalSample::read_csv(ss);
  ASSERT_EQ(back.dim(), 4);
  ASSERT_EQ(back.size(), 50u);
  EXPECT_TRUE(std::equal(s.data().begin(), s.data().end(), back.data().begin()));
}

TEST(SphericalSample, CsvErrors) {
  std::istringstream not_unit("x1,x2,x3\n1,1,0\n");
  EXPECT_THROW(SphericalSample::read_csv(not_unit), DataError);
  std::istringstream bad_header("a,b\n1,0\n");
  EXPECT_THROW(SphericalSample::read_csv(bad_header), DataError);
  std::istringstream ragged("x1,x2\n1,0\n0\n");
  EXPECT_THROW(SphericalSample::read_csv(ragged), DataError);
  std::istringstream empty("");
  EXPECT_THROW(SphericalSample::read_csv(empty), DataError);
}

}  // namespace
}  // namespace sphtest
