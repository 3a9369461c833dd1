#include "sphtest/harmonics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sphtest/error.hpp"
#include "sphtest/rotsym.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest::harmonics {
namespace {

std::vector<double> random_unit(int p, CounterRng& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> x(p);
  double sq = 0;
  for (auto& v : x) {
    v = normal(rng);
    sq += v * v;
  }
  for (auto& v : x) v /= std::sqrt(sq);
  return x;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(Hyperspherical, DocumentedValues) {
  auto c = to_hyperspherical(std::vector<double>{0, 0, 1});
  EXPECT_EQ(c.theta[0], 0.0);
  EXPECT_EQ(c.theta[1], 0.0);

  c = to_hyperspherical(std::vector<double>{1, 0});
  EXPECT_NEAR(c.theta[0], std::numbers::pi / 2, 1e-15);

  c = to_hyperspherical(std::vector<double>{0, 1, 0});
  EXPECT_NEAR(c.theta[0], 0.0, 1e-15);
  EXPECT_NEAR(c.theta[1], std::numbers::pi / 2, 1e-15);

  EXPECT_THROW(to_hyperspherical(std::vector<double>{0, 0, 1.1}), DataError);
}

TEST(Hyperspherical, RoundTripAndRanges) {
  CounterRng rng(stream_key(1, {}));
  for (int p = 2; p <= 8; ++p) {
    for (int rep = 0; rep < 200; ++rep) {
      const auto x = random_unit(p, rng);
      const auto c = to_hyperspherical(x);
      ASSERT_EQ(static_cast<int>(c.theta.size()), p - 1);
      EXPECT_GE(c.theta[0], 0.0);
      EXPECT_LT(c.theta[0], 2 * std::numbers::pi);
      for (int j = 1; j < p - 1; ++j) {
        EXPECT_GE(c.theta[j], 0.0);
        EXPECT_LE(c.theta[j], std::numbers::pi);
      }
      const auto y = from_hyperspherical(c);
      for (int i = 0; i < p; ++i) EXPECT_NEAR(y[i], x[i], 1e-12);
    }
  }
}

TEST(MultiIndices, CountAndOrder) {
  for (int p = 3; p <= 7; ++p) {
    for (int k = 1; k <= 8; ++k) {
      const auto& idx = multi_indices(p, k);
      EXPECT_EQ(static_cast<std::int64_t>(idx.size()), specfun::harmonic_dim(p, k));
      EXPECT_EQ(idx.front().m[0], k);
      for (std::size_t r = 1; r < idx.size(); ++r) EXPECT_TRUE(idx[r - 1].m > idx[r].m);
      for (const auto& mi : idx) {
        EXPECT_TRUE(std::isfinite(mi.log_b));
        EXPECT_LE(mi.m[p - 1], 1);
      }
    }
  }
  EXPECT_THROW(multi_indices(3, 0), DomainError);
}

TEST(BasisEval, DocumentedValues) {
  for (int p = 3; p <= 6; ++p) {
    std::vector<double> pole(p, 0.0);
    pole[p - 1] = 1.0;
    for (int k = 1; k <= 6; ++k) {
      const auto g = basis_eval(p, k, pole);
      const double d = static_cast<double>(specfun::harmonic_dim(p, k));
      EXPECT_NEAR(g.values[0], std::sqrt(d), 1e-12 * std::sqrt(d));
      for (std::size_t r = 1; r < g.values.size(); ++r) EXPECT_EQ(g.values[r], 0.0);
    }
  }
  const auto g2 = basis_eval(2, 1, std::vector<double>{0, 1});
  EXPECT_NEAR(g2.values[0], std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(g2.values[1], 0.0, 1e-15);
  EXPECT_THROW(basis_eval(3, 0, std::vector<double>{0, 0, 1}), DomainError);
}

TEST(BasisEval, DegreeOneIsRotatedCoordinates) {
  CounterRng rng(stream_key(2, {}));
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_unit(3, rng);
    const auto g = basis_eval(3, 1, x);
    // H^3_1 is spanned by the coordinates: each value is sqrt3 times one coordinate.
    EXPECT_NEAR(dot(g.values, g.values), 3.0, 1e-12);
    std::vector<double> sorted_g, sorted_x;
    for (double v : g.values) sorted_g.push_back(std::abs(v));
    for (double v : x) sorted_x.push_back(std::sqrt(3.0) * std::abs(v));
    std::sort(sorted_g.begin(), sorted_g.end());
    std::sort(sorted_x.begin(), sorted_x.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(sorted_g[i], sorted_x[i], 1e-12);
  }
}

TEST(BasisEval, FirstEntryIsZonal) {
  CounterRng rng(stream_key(3, {}));
  for (int p = 3; p <= 6; ++p) {
    for (int k = 1; k <= 6; ++k) {
      const auto x = random_unit(p, rng);
      const auto g = basis_eval(p, k, x);
      const double d = static_cast<double>(specfun::harmonic_dim(p, k));
      const double expected = addition_kernel(p, k, x[p - 1]) / std::sqrt(d);
      EXPECT_NEAR(g.values[0], expected, 1e-10);
    }
  }
}

TEST(AdditionKernel, DocumentedValues) {
  for (int p = 2; p <= 8; ++p) {
    for (int k = 1; k <= 10; ++k) {
      const double d = static_cast<double>(specfun::harmonic_dim(p, k));
      EXPECT_NEAR(addition_kernel(p, k, 1.0), d, 1e-9 * d);
    }
  }
  EXPECT_NEAR(addition_kernel(3, 1, 0.3), 0.9, 1e-15);
  EXPECT_NEAR(addition_kernel(2, 2, 0.0), -2.0, 1e-15);
  EXPECT_THROW(addition_kernel(3, 0, 0.5), DomainError);
}

TEST(AdditionFormula, RandomPairs) {
  CounterRng rng(stream_key(4, {}));
  for (int p = 2; p <= 4; ++p) {
    for (int k = 1; k <= 6; ++k) {
      for (int rep = 0; rep < 200; ++rep) {
        const auto u = random_unit(p, rng);
        const auto v = random_unit(p, rng);
        const auto gu = basis_eval(p, k, u);
        const auto gv = basis_eval(p, k, v);
        EXPECT_NEAR(dot(gu.values, gv.values), addition_kernel(p, k, dot(u, v)), 1e-9);
      }
    }
  }
}

TEST(NormConstancy, HighDimensionsAndDegrees) {
  CounterRng rng(stream_key(5, {}));
  for (int p : {2, 3, 5, 8, 12}) {
    for (int k : {1, 2, 5, 9, 15}) {
      if (specfun::harmonic_dim(p, k) > 200000) continue;
      const HarmonicBasis basis(p, k);
      std::vector<double> out(basis.size());
      const double d = static_cast<double>(specfun::harmonic_dim(p, k));
      for (int rep = 0; rep < 5; ++rep) {
        basis.eval(random_unit(p, rng), out);
        double sq = 0;
        for (double v : out) sq += v * v;
        EXPECT_NEAR(sq, d, 1e-9 * d) << p << " " << k;
      }
    }
  }
}

TEST(Orthonormality, MonteCarlo) {
  const int n = 1'000'000;
  for (int p = 2; p <= 4; ++p) {
    std::vector<HarmonicBasis> bases;
    std::size_t total = 0;
    for (int k = 1; k <= 4; ++k) {
      bases.emplace_back(p, k);
      total += bases.back().size();
    }
    std::vector<double> gram(total * total, 0.0), gram_sq(total * total, 0.0), row(total);
    const auto sample = sample_uniform(p, n, 99);
    for (int i = 0; i < n; ++i) {
      const PointTrig trig(sample.row(i));
      std::size_t off = 0;
      for (const auto& b : bases) {
        b.eval(trig, std::span<double>(row).subspan(off, b.size()));
        off += b.size();
      }
      for (std::size_t r = 0; r < total; ++r) {
        for (std::size_t s = r; s < total; ++s) {
          const double v = row[r] * row[s];
          gram[r * total + s] += v;
          gram_sq[r * total + s] += v * v;
        }
      }
    }
    for (std::size_t r = 0; r < total; ++r) {
      for (std::size_t s = r; s < total; ++s) {
        const double mean = gram[r * total + s] / n;
        const double se = std::sqrt((gram_sq[r * total + s] / n - mean * mean) / n);
        // 5e-3 is under 3 SE for the heaviest-tailed diagonal entries at N = 1e6.
        EXPECT_NEAR(mean, r == s ? 1.0 : 0.0, std::max(5e-3, 4 * se)) << "p=" << p << " " << r << "," << s;
      }
    }
  }
}

TEST(FunkHecke, ExponentialKernelOnS2) {
  // Product rule on S^2: Gauss-Legendre in cos(theta_2) times trapezoid in theta_1.
  const int p = 3;
  const auto& rule = specfun::cached_rule(p, 64);
  const int nphi = 128;
  CounterRng rng(stream_key(6, {}));
  for (int k = 1; k <= 3; ++k) {
    // lambda_k = 2 pi int exp(s) P_k(s) ds with the surface measure of area 4 pi.
    const double lambda_k =
        2 * std::numbers::pi * rule.integrate([k](double s) { return std::exp(s) * specfun::gegenbauer(0.5, k, s); });
    const HarmonicBasis basis(p, k);
    std::vector<double> g(basis.size()), acc(basis.size()), target(basis.size());
    for (int rep = 0; rep < 50; ++rep) {
      const auto eta = random_unit(p, rng);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int a = 0; a < rule.order(); ++a) {
        const double z = rule.nodes[a], r = std::sqrt(1 - z * z);
        for (int b = 0; b < nphi; ++b) {
          const double phi = 2 * std::numbers::pi * b / nphi;
          const std::vector<double> xi{r * std::sin(phi), r * std::cos(phi), z};
          basis.eval(xi, g);
          const double w = rule.weights[a] * 2 * std::numbers::pi / nphi * std::exp(dot(xi, eta));
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += w * g[i];
        }
      }
      basis.eval(eta, target);
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(acc[i], lambda_k * target[i], 1e-6);
    }
  }
}

}  // namespace
}  // namespace sphtest::harmonics
