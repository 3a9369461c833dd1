#pragma once

// Sobolev statistics S_v = (1/n) sum_{i,j} sum_k v_k^2 h_{p,k}(U_i'U_j), in
// kernel and harmonic-sum form, and test decisions.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sphtest/harmonics.hpp"
#include "sphtest/mixture.hpp"
#include "sphtest/rotsym.hpp"

namespace sphtest {

/// Truncation tolerance for infinite sequences: tail mass < kTailTolerance * total.
inline constexpr double kTailTolerance = 1e-6;

class WeightSequence {
 public:
  /// v_1, ..., v_K. At least one entry must be nonzero.
  static WeightSequence finite(std::vector<double> v, std::string name = "");
  /// k -> v_k for k >= 1, truncated per dimension so that the tail mass
  /// sum_{k>K} v_k^2 d_{p,k} is below kTailTolerance times the total.
  static WeightSequence infinite(std::function<double(int)> rule, std::string name);
  /// "rayleigh", "bingham", "3-test".
  static WeightSequence named(const std::string& name);
  /// A name or a comma-separated list v_1,v_2,...
  static WeightSequence parse(const std::string& spec);

  bool is_finite() const { return !rule_; }
  const std::string& name() const { return name_; }

  struct Truncation {
    std::vector<double> v;  // v_1..v_K
    double tail_mass = 0;   // sum_{k>K} v_k^2 d_{p,k}
    double total_mass = 0;  // sum_k v_k^2 d_{p,k}
  };
  Truncation truncate(int p) const;

  /// Smallest k with v_k != 0.
  int k_v(int p) const;
  /// Largest k with v_k != 0 (of the truncation for infinite sequences).
  int K_v(int p) const;

 private:
  WeightSequence() = default;

  std::string name_;
  std::vector<double> v_;
  std::function<double(int)> rule_;
};

/// Kernel form, O(n^2 K). Diagonal terms i = j are included.
double stat_kernel(const SphericalSample& sample, const WeightSequence& weights);
/// Harmonic-sum form, O(n sum_k d_{p,k}).
double stat_harmonic(const SphericalSample& sample, const WeightSequence& weights);

/// n p |mean|^2
double rayleigh_stat(const SphericalSample& sample);
/// n p (p+2)/2 tr[(S - I/p)^2], S = (1/n) sum U_i U_i'
double bingham_stat(const SphericalSample& sample);

/// Reusable harmonic-form evaluator for raw row-major data.
class SobolevStatistic {
 public:
  SobolevStatistic(int p, const WeightSequence& weights);

  int dim() const { return p_; }
  double tail_mass() const { return tail_mass_; }
  double operator()(std::span<const double> rows) const;

 private:
  int p_;
  std::vector<double> weight_;  // v_k^2 for each basis
  std::vector<harmonics::HarmonicBasis> bases_;
  std::size_t total_ = 0;
  double tail_mass_ = 0;
};

struct TestResult {
  std::string test;
  int p = 0;
  std::size_t n = 0;
  double statistic = 0;
  double critical_value = 0;
  double critical_se = 0;
  double alpha = 0;
  bool reject = false;
  double pvalue = 0;
  double pvalue_se = 0;
  std::string law;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  double tail_bound = 0;

  /// Flat key=value lines.
  std::string to_record() const;
};

/// Decision rule: strict inequality, so statistic == critical value does not reject.
inline bool rejects(double statistic, double critical_value) { return statistic > critical_value; }

/// Rejects when the statistic strictly exceeds the upper alpha-quantile of law.
TestResult run_test(const SphericalSample& sample, const WeightSequence& weights, double alpha,
                    const MixtureLaw& law);

}  // namespace sphtest
