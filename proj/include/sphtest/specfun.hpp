#pragma once

// Special-function layer: Gegenbauer / Chebyshev polynomials, harmonic-space
// dimensions, null moments of the projection U'theta and Gauss-Jacobi rules
// for the latitude weight (1 - s^2)^((p-3)/2).

#include <cstdint>
#include <span>
#include <vector>

namespace sphtest::specfun {

/// Largest polynomial degree supported by the coefficient-based routines.
inline constexpr int kMaxDegree = 30;

/// Gegenbauer index attached to the sphere S^{p-1}: (p - 2) / 2.
inline double gegen_lambda(int p) { return 0.5 * (p - 2); }

/// Exact binomial coefficient; throws NumericalError on 128-bit overflow.
__int128 binomial(int n, int k);

/// Dimension d_{p,k} of the space of degree-k spherical harmonics on S^{p-1}.
std::int64_t harmonic_dim(int p, int k);

/// Degree-q Gegenbauer polynomial C_q^lambda(t) for lambda > 0, or the
/// first-kind Chebyshev polynomial T_q(t) for lambda == 0. Three-term
/// recurrence; |t| is clamped to 1 when it exceeds 1 by at most 1e-12.
double gegenbauer(double lambda, int q, double t);

/// Writes C_0^lambda(t), ..., C_{qmax}^lambda(t) into out[0..qmax].
void gegenbauer_all(double lambda, int qmax, double t, std::span<double> out);

/// Coefficients of C_q^lambda(t) = sum_j (-1)^j c_{q,j} t^{q-2j}.
struct GegenCoeffTable {
  double lambda = 0.0;
  int q = 0;
  std::vector<double> coeffs;  // j = 0 .. floor(q/2)

  /// Coefficient-sum evaluation; used as an oracle for the recurrence.
  double eval(double t) const;
};

GegenCoeffTable gegen_coeffs(double lambda, int q);

/// Normalizing constant of the uniform law: c_p = Gamma(p/2) / (sqrt(pi) Gamma((p-1)/2)).
double sphere_constant(int p);

/// t_{p,k}: sqrt(2) for p = 2 and (1 + 2k/(p-2)) / sqrt(d_{p,k}) for p >= 3.
double t_factor(int p, int k);

/// Null moment a_m = E_0[(U'theta)^m]; exactly zero for odd m.
double null_moment(int p, int m);

/// Coefficients m_{k,i}, k = 0..i, such that sum_k m_{k,i} C_k^{(p-2)/2}(t) = t^i
/// (Chebyshev basis when p = 2). Entries with k and i of opposite parity are
/// exact zeros.
std::vector<double> monomial_to_gegenbauer(int p, int i);

/// Gauss rule for integrals of g(s) (1 - s^2)^((p-3)/2) over (-1, 1).
struct QuadratureRule {
  int p = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const { return static_cast<int>(nodes.size()); }

  template <class F>
  double integrate(F&& g) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * g(nodes[i]);
    return sum;
  }
};

inline constexpr int kDefaultQuadratureOrder = 64;

/// Golub-Welsch on the symmetric Jacobi matrix (alpha = beta = (p-3)/2);
/// Chebyshev-Gauss nodes for p = 2.
QuadratureRule gauss_jacobi_rule(int p, int order);

/// Memoized gauss_jacobi_rule; the returned reference stays valid for the
/// lifetime of the program. Thread-safe.
const QuadratureRule& cached_rule(int p, int order = kDefaultQuadratureOrder);

}  // namespace sphtest::specfun
