#pragma once

// Weighted sums of independent (possibly noncentral) chi-square variables,
// sum_k w_k Y_k with Y_k ~ chi2_{d_k}(xi_k).

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace sphtest {

/// P[chi2_d(xi) <= x] by the Poisson-weighted central series, truncated once
/// the remaining Poisson mass is below 1e-12.
double ncx2_cdf(double df, double xi, double x);
/// P[chi2_d(xi) > x], summed directly on upper-tail terms.
double ncx2_sf(double df, double xi, double x);
/// x with P[chi2_d(xi) > x] = upper, by bracketing and bisection.
double ncx2_upper_quantile(double df, double xi, double upper);

struct MixtureTerm {
  int k = 0;            // harmonic degree the term comes from
  double weight = 0;    // v_k^2
  std::int64_t df = 1;  // d_{p,k}
  double xi = 0;        // noncentrality
};

struct Estimate {
  double value = 0;
  double se = 0;
};

inline constexpr std::size_t kDefaultDraws = 1'000'000;
inline constexpr std::uint64_t kDefaultLawSeed = 20200417;

class MixtureLaw {
 public:
  MixtureLaw(int p, std::vector<MixtureTerm> terms, double tail_bound = 0.0,
             std::size_t draws = kDefaultDraws, std::uint64_t seed = kDefaultLawSeed);

  int dim() const { return p_; }
  const std::vector<MixtureTerm>& terms() const { return terms_; }
  double tail_bound() const { return tail_bound_; }
  std::size_t draws() const { return draws_; }
  std::uint64_t seed() const { return seed_; }
  bool single_term() const { return terms_.size() == 1; }
  bool central() const;

  /// Upper alpha-quantile. Exact series value for single-term laws, Monte Carlo otherwise.
  Estimate quantile(double alpha) const;
  /// P[X > c]. Exact for single-term laws, Monte Carlo otherwise.
  Estimate tail(double c) const;

  /// Monte Carlo versions, always from the cached sample.
  Estimate quantile_mc(double alpha) const;
  Estimate tail_mc(double c) const;

  /// Sorted Monte Carlo draws, generated on first use.
  std::span<const double> sample() const;

  /// "w*chi2_d(xi)+..." in a compact form.
  std::string describe() const;

 private:
  int p_;
  std::vector<MixtureTerm> terms_;
  double tail_bound_;
  std::size_t draws_;
  std::uint64_t seed_;
  struct Cache {
    std::once_flag once;
    std::vector<double> sorted;
  };
  std::shared_ptr<Cache> cache_;
};

}  // namespace sphtest
