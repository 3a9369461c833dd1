#include "sphtest/specfun.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "sphtest/error.hpp"

namespace sphtest::specfun {

namespace {

void check_dim(int p) {
  if (p < 2) throw DomainError("dimension p must be >= 2, got " + std::to_string(p));
}

double clamp_unit(double t) {
  if (std::abs(t) > 1.0 + 1e-12) {
    throw DomainError("polynomial argument outside [-1, 1]: " + std::to_string(t));
  }
  return std::clamp(t, -1.0, 1.0);
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

__int128 binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  constexpr __int128 kMax = ~(__int128(1) << 127);
  for (int i = 1; i <= k; ++i) {
    const __int128 factor = n - k + i;
    if (r > kMax / factor) throw NumericalError("binomial coefficient overflows 128 bits");
    // r * factor is divisible by i: r is C(n-k+i-1, i-1).
    r = r * factor / i;
  }
  return r;
}

std::int64_t harmonic_dim(int p, int k) {
  check_dim(p);
  if (k < 0) throw DomainError("degree k must be >= 0");
  if (k == 0) return 1;
  if (k == 1) return p;
  const __int128 d = binomial(p + k - 1, k) - binomial(p + k - 3, k - 2);
  if (d > std::numeric_limits<std::int64_t>::max()) {
    throw NumericalError("harmonic dimension overflows 64 bits");
  }
  return static_cast<std::int64_t>(d);
}

double gegenbauer(double lambda, int q, double t) {
  if (q < 0) throw DomainError("Gegenbauer degree must be >= 0");
  if (lambda < 0) throw DomainError("Gegenbauer index must be >= 0");
  t = clamp_unit(t);
  if (q == 0) return 1.0;
  double prev = 1.0;
  double cur = (lambda == 0.0) ? t : 2.0 * lambda * t;
  for (int n = 1; n < q; ++n) {
    double next;
    if (lambda == 0.0) {
      next = 2.0 * t * cur - prev;
    } else {
      next = (2.0 * (n + lambda) * t * cur - (n + 2.0 * lambda - 1.0) * prev) / (n + 1);
    }
    prev = cur;
    cur = next;
  }
  return cur;
}

void gegenbauer_all(double lambda, int qmax, double t, std::span<double> out) {
  if (qmax < 0) throw DomainError("Gegenbauer degree must be >= 0");
  if (lambda < 0) throw DomainError("Gegenbauer index must be >= 0");
  if (out.size() < static_cast<std::size_t>(qmax) + 1) {
    throw DomainError("output span too small for Gegenbauer values");
  }
  t = clamp_unit(t);
  out[0] = 1.0;
  if (qmax == 0) return;
  out[1] = (lambda == 0.0) ? t : 2.0 * lambda * t;
  for (int n = 1; n < qmax; ++n) {
    if (lambda == 0.0) {
      out[n + 1] = 2.0 * t * out[n] - out[n - 1];
    } else {
      out[n + 1] =
          (2.0 * (n + lambda) * t * out[n] - (n + 2.0 * lambda - 1.0) * out[n - 1]) / (n + 1);
    }
  }
}

double GegenCoeffTable::eval(double t) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const double term = coeffs[j] * std::pow(t, q - 2 * static_cast<int>(j));
    sum += (j % 2 == 0) ? term : -term;
  }
  return sum;
}

GegenCoeffTable gegen_coeffs(double lambda, int q) {
  if (q < 0 || q > kMaxDegree) {
    throw DomainError("Gegenbauer coefficient degree must lie in [0, " +
                      std::to_string(kMaxDegree) + "]");
  }
  if (lambda < 0) throw DomainError("Gegenbauer index must be >= 0");
  GegenCoeffTable table{lambda, q, {}};
  for (int j = 0; 2 * j <= q; ++j) {
    double c;
    if (lambda > 0) {
      // 2^{q-2j} Gamma(q-j+lambda) / (Gamma(lambda) j! (q-2j)!) with the Gamma
      // ratio written as the Pochhammer product (lambda)_{q-j}.
      double poch = 1.0;
      for (int r = 0; r < q - j; ++r) poch *= lambda + r;
      c = std::ldexp(poch, q - 2 * j) / (factorial(j) * factorial(q - 2 * j));
    } else if (q == 0) {
      c = 1.0;
    } else {
      c = std::ldexp(q * factorial(q - j - 1), q - 2 * j - 1) /
          (factorial(j) * factorial(q - 2 * j));
    }
    table.coeffs.push_back(c);
  }
  return table;
}

double sphere_constant(int p) {
  check_dim(p);
  return std::exp(std::lgamma(0.5 * p) - std::lgamma(0.5 * (p - 1))) / std::sqrt(std::numbers::pi);
}

double t_factor(int p, int k) {
  check_dim(p);
  if (k < 1) throw DomainError("t_{p,k} requires k >= 1");
  if (p == 2) return std::numbers::sqrt2;
  return (1.0 + 2.0 * k / (p - 2)) / std::sqrt(static_cast<double>(harmonic_dim(p, k)));
}

double null_moment(int p, int m) {
  check_dim(p);
  if (m < 0) throw DomainError("moment order must be >= 0");
  if (m % 2 == 1) return 0.0;
  double a = 1.0;
  for (int r = 0; r < m / 2; ++r) a *= (1.0 + 2.0 * r) / (p + 2.0 * r);
  return a;
}

std::vector<double> monomial_to_gegenbauer(int p, int i) {
  check_dim(p);
  if (i < 0 || i > kMaxDegree) {
    throw DomainError("monomial degree must lie in [0, " + std::to_string(kMaxDegree) + "]");
  }
  const double lambda = gegen_lambda(p);
  std::vector<GegenCoeffTable> tables;
  tables.reserve(i + 1);
  for (int k = 0; k <= i; ++k) tables.push_back(gegen_coeffs(lambda, k));

  // Triangular system: the coefficient of t^d on both sides, solved from the
  // top degree down. Only degrees of the parity of i are touched; the others
  // stay exact zeros.
  std::vector<double> m(i + 1, 0.0);
  m[i] = 1.0 / tables[i].coeffs[0];
  for (int d = i - 2; d >= 0; d -= 2) {
    double acc = 0.0;
    for (int k = d + 2; k <= i; k += 2) {
      const int j = (k - d) / 2;
      const double entry = (j % 2 == 0) ? tables[k].coeffs[j] : -tables[k].coeffs[j];
      acc += m[k] * entry;
    }
    m[d] = -acc / tables[d].coeffs[0];
  }
  return m;
}

QuadratureRule gauss_jacobi_rule(int p, int order) {
  check_dim(p);
  if (order <= 0) throw DomainError("quadrature order must be >= 1");
  QuadratureRule rule;
  rule.p = p;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  if (p == 2) {
    for (int i = 0; i < order; ++i) {
      // Ascending order.
      rule.nodes[i] = -std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * order));
      rule.weights[i] = std::numbers::pi / order;
    }
    return rule;
  }

  const double a = 0.5 * (p - 3);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(std::max(order - 1, 0));
  for (int n = 1; n < order; ++n) {
    sub[n - 1] = std::sqrt(n * (n + 2.0 * a) / ((2.0 * n + 2.0 * a + 1.0) * (2.0 * n + 2.0 * a - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Golub-Welsch eigenvalue problem did not converge");
  }
  const double mu0 = 1.0 / sphere_constant(p);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

const QuadratureRule& cached_rule(int p, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<const QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{p, order}];
  if (!slot) slot = std::make_unique<const QuadratureRule>(gauss_jacobi_rule(p, order));
  return *slot;
}

}  // namespace sphtest::specfun
