#pragma once

// Local asymptotic theory under rotationally symmetric alternatives with
// concentration kappa_n = n^{-1/ell} tau: small-kappa expansions, noncentrality
// parameters, detection thresholds and limiting chi-square mixture laws.

#include <optional>
#include <string>
#include <vector>

#include "sphtest/mixture.hpp"
#include "sphtest/rotsym.hpp"
#include "sphtest/sobolev.hpp"

namespace sphtest::asymptotics {

/// Largest order t of the triangular systems (coefficient growth beyond this).
inline constexpr int kMaxOrder = 16;

/// The lower unitriangular system A_t with entries a_{i-j} f^(i-j)(0)/(i-j)!.
class ExpansionSystem {
 public:
  ExpansionSystem(int p, const AngularFunction& f, int t);

  int order() const { return t_; }
  int size() const { return t_ + 1; }
  double A(int i, int j) const { return a_[i * size() + j]; }

  /// v^(m) with entries a_{m+i} f^(i)(0)/i!
  std::vector<double> v(int m) const;
  /// z^(k) with entries m_{k,i} f^(i)(0)/i! for i >= k, zero below.
  std::vector<double> z(int k) const;

  /// A^{-1} rhs by forward substitution.
  std::vector<double> solve(const std::vector<double>& rhs) const;
  /// A^{-1} (row-major) by forward substitution on the unit vectors.
  std::vector<double> inverse() const;
  /// A^{-1} as the finite Neumann sum sum_j (-L)^j, L = A - I.
  std::vector<double> inverse_neumann() const;

 private:
  int p_;
  int t_;
  AngularFunction f_;
  std::vector<double> a_;
};

/// b_{m,0..q-m} with E[(U'theta)^m] = sum_l b_{m,l} kappa^l + o(kappa^{q-m}).
std::vector<double> expansion_coeffs(int p, int m, int q, const AngularFunction& f);

/// Coefficients of kappa^l, l = k..k+r, in E[C_k^{(p-2)/2}(U'theta)].
std::vector<double> gegenbauer_expectation_coeffs(int p, int k, int r, const AngularFunction& f);

/// xi_{p,k}(tau); both closed forms are evaluated and must agree to 1e-10.
double noncentrality_standard(int p, int k, double tau, const AngularFunction& f);
/// xi_{p,k,k*}(tau) for k <= k*, k of the parity of k*; both closed forms checked.
double noncentrality_delayed(int p, int k, int k_star, double tau, const AngularFunction& f);

enum class ThresholdCase { standard, delayed, blind };
const char* to_string(ThresholdCase c);

struct ThresholdReport {
  int k_v = 0;
  int q = 0;
  std::optional<int> k_star;
  std::optional<int> k_dagger;
  ThresholdCase kind = ThresholdCase::blind;

  /// ell = 2 k*, the detection threshold kappa_n ~ n^{-1/ell}.
  std::optional<int> rate_ell() const {
    if (!k_star) return std::nullopt;
    return 2 * *k_star;
  }
  std::string to_record() const;
};

/// k* = min k in {k_v..q} with f^(k)(0) != 0 and some l in [k_v, k], l of the
/// parity of k, with v_l != 0; k_dagger = the smallest such l.
ThresholdReport classify_threshold(const WeightSequence& weights, const AngularFunction& f, int q, int p = 3);

/// Default classification order: as far as f's derivative data allows.
int default_order(const AngularFunction& f);

struct LawOptions {
  std::size_t draws = kDefaultDraws;
  std::uint64_t seed = kDefaultLawSeed;
};

/// sum_k v_k^2 Y_k with Y_k ~ chi2_{d_{p,k}}.
MixtureLaw null_law(const WeightSequence& weights, int p, const LawOptions& opts = {});

/// Limit law under kappa_n = n^{-1/ell} tau. Noncentral terms per the
/// classification when ell = 2k*, central when ell < 2k* or the test is blind
/// up to order ceil(ell/2); ell > 2k* is a rate/classification mismatch.
MixtureLaw limit_law(const WeightSequence& weights, int p, const AngularFunction& f, double tau, int ell,
                     const LawOptions& opts = {});

struct PowerValue {
  double power = 0;
  double se = 0;
  bool trivial = false;
  double tail_bound = 0;
  std::string note;
};

/// Asymptotic power at the detection threshold ell = 2k*. Blind cases return
/// exactly alpha, flagged trivial.
PowerValue asymptotic_power(const WeightSequence& weights, int p, const AngularFunction& f, double tau,
                            double alpha, const LawOptions& opts = {});

/// Power of the level-alpha test when the statistic follows `alt`.
PowerValue mixture_power(const MixtureLaw& null, const MixtureLaw& alt, double alpha);

}  // namespace sphtest::asymptotics
