#pragma once

// Real orthonormal bases of the harmonic spaces H^p_k on S^{p-1}.
//
// For p = 2 the basis is (sqrt2 cos k theta, sqrt2 sin k theta) with
// x = (sin theta, cos theta). For p >= 3 each basis function is indexed by a
// multi-index m in M_k = { m in N_0^p : |m| = k, m_p in {0,1} } and is a
// product of Gegenbauer polynomials in the cosines of the hyperspherical
// angles, weighted by powers of their sines. Multi-indices are enumerated in
// descending lexicographic order, so the first one is always (k, 0, ..., 0),
// the zonal harmonic around the north pole e_p.

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace sphtest::harmonics {

inline constexpr int kMaxDim = 20;
inline constexpr int kMaxDegree = 30;

/// Angles theta_1 in [0, 2pi) and theta_j in [0, pi] for j >= 2, stored as
/// theta[0] = theta_1, ..., theta[p-2] = theta_{p-1}.
struct HypersphericalCoords {
  std::vector<double> theta;
};

HypersphericalCoords to_hyperspherical(std::span<const double> x);
std::vector<double> from_hyperspherical(const HypersphericalCoords& coords);

struct MultiIndex {
  std::vector<int> m;      // m_1..m_p
  double log_b = 0.0;      // log B_m
};

/// Enumerates M_k in the library's fixed order. Cached; thread-safe.
const std::vector<MultiIndex>& multi_indices(int p, int k);

/// Cosines and sines of the hyperspherical angles of one point, computed
/// directly from its Cartesian coordinates (no inverse trigonometry).
class PointTrig {
 public:
  explicit PointTrig(std::span<const double> x);

  int dim() const { return p_; }
  /// cos / sin of theta_i, i = 1..p-1.
  double cos_theta(int i) const { return cos_[i - 1]; }
  double sin_theta(int i) const { return sin_[i - 1]; }

 private:
  int p_;
  std::array<double, kMaxDim> cos_;
  std::array<double, kMaxDim> sin_;
};

/// Evaluator of G_{p,k} = (g_{1,k}, ..., g_{d_{p,k},k}).
class HarmonicBasis {
 public:
  HarmonicBasis(int p, int k);

  int dim() const { return p_; }
  int degree() const { return k_; }
  std::size_t size() const { return size_; }

  /// Writes G_{p,k}(x) into out[0..size()).
  void eval(const PointTrig& trig, std::span<double> out) const;
  void eval(std::span<const double> x, std::span<double> out) const;

 private:
  struct Term {
    double sqrt_b;
    bool sine;        // zeta is sin((m_{p-1}+1) theta_1) instead of cos(m_{p-1} theta_1)
    int freq;         // frequency in theta_1
    // For j = 1..p-2: Gegenbauer degree m_j, index lambda_j, sine power |m^{j+1}|.
    std::vector<int> degree;
    std::vector<double> lambda;
    std::vector<int> sine_power;
  };

  int p_;
  int k_;
  std::size_t size_;
  std::vector<Term> terms_;
};

struct HarmonicVector {
  int p = 0;
  int k = 0;
  std::vector<double> values;
};

HarmonicVector basis_eval(int p, int k, std::span<const double> x);

/// h_{p,k}(s) = 2 T_k(s) for p = 2 and (1 + 2k/(p-2)) C_k^{(p-2)/2}(s) for p >= 3,
/// so that <G_{p,k}(u), G_{p,k}(v)> = h_{p,k}(u'v).
double addition_kernel(int p, int k, double s);

}  // namespace sphtest::harmonics
