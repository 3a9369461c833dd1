#include "sphtest/sobolev.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "sphtest/asymptotics.hpp"
#include "sphtest/error.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest {
namespace {

SphericalSample rotate(const SphericalSample& s, const Eigen::MatrixXd& O) {
  const int p = s.dim();
  std::vector<double> rows(s.size() * p);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int a = 0; a < p; ++a) {
      double v = 0;
      for (int b = 0; b < p; ++b) v += O(a, b) * s.row(i)[b];
      rows[i * p + a] = v;
    }
  }
  return SphericalSample(p, std::move(rows));
}

Eigen::MatrixXd random_orthogonal(int p, CounterRng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) G(i, j) = normal(rng);
  }
  return Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
}

TEST(WeightSequence, NamedAndParsed) {
  EXPECT_EQ(WeightSequence::named("rayleigh").k_v(3), 1);
  EXPECT_EQ(WeightSequence::named("bingham").k_v(3), 2);
  EXPECT_EQ(WeightSequence::named("3-test").K_v(3), 3);
  const auto w = WeightSequence::parse("0, 1,0.5");
  EXPECT_EQ(w.k_v(3), 2);
  EXPECT_EQ(w.K_v(3), 3);
  EXPECT_EQ(WeightSequence::parse("1,0,0").K_v(3), 1);
  EXPECT_THROW(WeightSequence::parse("0,0"), DomainError);
  EXPECT_THROW(WeightSequence::parse("1,x"), DomainError);
  EXPECT_THROW(WeightSequence::parse("1,"), DomainError);
  EXPECT_THROW(WeightSequence::named("watson"), DomainError);
}

TEST(WeightSequence, InfiniteTruncation) {
  const auto w = WeightSequence::infinite([](int k) { return std::pow(0.5, k); }, "geometric");
  const auto t = w.truncate(3);
  EXPECT_LT(t.tail_mass, kTailTolerance * t.total_mass);
  // Removing the last kept term would break the tolerance.
  const int K = static_cast<int>(t.v.size());
  const double last = std::pow(0.25, K) * (2 * K + 1);
  EXPECT_GE(t.tail_mass + last, kTailTolerance * t.total_mass);
  // sum 0.25^k (2k+1) = 2 (1/4)/(3/4)^2 + (1/4)/(3/4) = 11/9
  EXPECT_NEAR(t.total_mass, 11.0 / 9.0, 1e-12);
  EXPECT_FALSE(w.is_finite());

  const auto flat = WeightSequence::infinite([](int) { return 1.0; }, "flat");
  EXPECT_THROW(flat.truncate(3), DomainError);
  const auto slow = WeightSequence::infinite([](int k) { return 1.0 / (k * k); }, "slow");
  EXPECT_THROW(slow.truncate(3), DomainError);  // needs far more than 30 terms
}

TEST(Statistics, DocumentedValues) {
  for (int p = 2; p <= 5; ++p) {
    std::vector<double> x(p, 0.0);
    x[0] = 1.0;
    const SphericalSample one(p, x);
    EXPECT_NEAR(stat_kernel(one, WeightSequence::named("rayleigh")), p, 1e-12);
    EXPECT_NEAR(stat_harmonic(one, WeightSequence::named("rayleigh")), p, 1e-12);
  }
  // n copies of the north pole.
  std::vector<double> rows;
  for (int i = 0; i < 40; ++i) rows.insert(rows.end(), {0.0, 0.0, 1.0});
  const SphericalSample poles(3, rows);
  EXPECT_NEAR(rayleigh_stat(poles), 120.0, 1e-10);
  EXPECT_NEAR(stat_harmonic(poles, WeightSequence::named("rayleigh")), 120.0, 1e-10);
}

TEST(Statistics, GreatCircle) {
  std::vector<double> rows;
  for (int i = 0; i < 100; ++i) {
    const double a = 2 * std::numbers::pi * i / 100;
    rows.insert(rows.end(), {std::cos(a), std::sin(a), 0.0});
  }
  const SphericalSample circle(3, rows);
  EXPECT_NEAR(rayleigh_stat(circle), 0.0, 1e-12);
  EXPECT_NEAR(bingham_stat(circle), 125.0, 1e-9);
  EXPECT_NEAR(stat_kernel(circle, WeightSequence::named("bingham")), 125.0, 1e-9);
}

TEST(Statistics, ClosedFormEquivalence) {
  for (int p = 2; p <= 6; ++p) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RotSymConfig cfg{p, {}, 1.0, AngularFunction::vmf(), seed};
      const auto s = sample_rotsym(cfg, 300);
      const double r = rayleigh_stat(s), b = bingham_stat(s);
      EXPECT_NEAR(stat_kernel(s, WeightSequence::named("rayleigh")), r, 1e-9 * r);
      EXPECT_NEAR(stat_harmonic(s, WeightSequence::named("rayleigh")), r, 1e-9 * r);
      EXPECT_NEAR(stat_kernel(s, WeightSequence::named("bingham")), b, 1e-9 * b);
      EXPECT_NEAR(stat_harmonic(s, WeightSequence::named("bingham")), b, 1e-9 * b);
    }
  }
}

TEST(Statistics, KernelEqualsHarmonic) {
  CounterRng rng(stream_key(12, {}));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p = 2; p <= 4; ++p) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> v(6);
      for (auto& x : v) x = unif(rng);
      const auto w = WeightSequence::finite(v);
      const auto s = sample_uniform(p, 200, 77, rep);
      const double kern = stat_kernel(s, w);
      EXPECT_NEAR(stat_harmonic(s, w), kern, 1e-8 * (1 + std::abs(kern)));
    }
  }
  const auto geo = WeightSequence::infinite([](int k) { return std::pow(0.6, k); }, "geometric");
  const auto s = sample_uniform(3, 150, 5);
  const double kern = stat_kernel(s, geo);
  EXPECT_NEAR(stat_harmonic(s, geo), kern, 1e-8 * (1 + std::abs(kern)));
}

TEST(Statistics, RotationInvariance) {
  CounterRng rng(stream_key(13, {}));
  for (int p = 2; p <= 5; ++p) {
    const auto s = sample_uniform(p, 150, 3);
    const auto rotated = rotate(s, random_orthogonal(p, rng));
    for (const auto& w : {WeightSequence::named("rayleigh"), WeightSequence::named("3-test"),
                          WeightSequence::parse("0.3,-1,0.2,0.7")}) {
      const double a = stat_kernel(s, w), b = stat_kernel(rotated, w);
      EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(a)));
      const double c = stat_harmonic(rotated, w);
      EXPECT_NEAR(a, c, 1e-9 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(Statistics, Errors) {
  EXPECT_THROW(SobolevStatistic(3, WeightSequence::named("rayleigh"))(std::vector<double>{}), DataError);
  EXPECT_THROW(SobolevStatistic(3, WeightSequence::named("rayleigh"))(std::vector<double>{1, 1, 0}), DataError);
}

TEST(RunTest, CriticalValues) {
  const auto s = sample_uniform(3, 100, 1);
  const auto ray = WeightSequence::named("rayleigh");
  const auto bing = WeightSequence::named("bingham");
  auto r = run_test(s, ray, 0.05, asymptotics::null_law(ray, 3));
  EXPECT_NEAR(r.critical_value, 7.814728, 1e-6);
  EXPECT_EQ(r.reject, r.statistic > r.critical_value);
  EXPECT_NEAR(r.statistic, rayleigh_stat(s), 1e-9 * r.statistic);
  r = run_test(s, bing, 0.05, asymptotics::null_law(bing, 3));
  EXPECT_NEAR(r.critical_value, 11.0705, 1e-4);
  EXPECT_FALSE(rejects(7.5, 7.5));
  EXPECT_TRUE(rejects(std::nextafter(7.5, 8.0), 7.5));
}

TEST(RunTest, MismatchErrors) {
  const auto s = sample_uniform(3, 50, 1);
  const auto ray = WeightSequence::named("rayleigh");
  EXPECT_THROW(run_test(s, ray, 0.05, asymptotics::null_law(ray, 4)), DomainError);
  EXPECT_THROW(run_test(s, ray, 0.05, asymptotics::null_law(WeightSequence::named("bingham"), 3)), DomainError);
  EXPECT_THROW(run_test(s, ray, 1.5, asymptotics::null_law(ray, 3)), DomainError);
}

TEST(RunTest, RecordAndPower) {
  RotSymConfig cfg{3, {}, 1.0, AngularFunction::vmf(), 4};
  const auto s = sample_rotsym(cfg, 500);
  const auto ray = WeightSequence::named("rayleigh");
  const auto r = run_test(s, ray, 0.05, asymptotics::null_law(ray, 3));
  EXPECT_TRUE(r.reject);
  EXPECT_LT(r.pvalue, 1e-3);
  const auto rec = r.to_record();
  for (const char* key : {"test=rayleigh\n", "p=3\n", "n=500\n", "reject=true\n", "law=1*chi2_3(0)\n"}) {
    EXPECT_NE(rec.find(key), std::string::npos) << key;
  }
}

TEST(RunTest, NullSize) {
  const int M = 2000;
  const double se = std::sqrt(0.05 * 0.95 / M);
  for (const char* name : {"rayleigh", "bingham", "3-test"}) {
    const auto w = WeightSequence::named(name);
    const auto law = asymptotics::null_law(w, 3);
    const double crit = law.quantile(0.05).value;
    const SobolevStatistic stat(3, w);
    int rejected = 0;
    for (int m = 0; m < M; ++m) rejected += rejects(stat(sample_uniform(3, 500, 2024, m).data()), crit);
    EXPECT_NEAR(static_cast<double>(rejected) / M, 0.05, 3 * se) << name;
  }
}

}  // namespace
}  // namespace sphtest
