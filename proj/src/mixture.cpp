#include "sphtest/mixture.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "format.hpp"
#include "sphtest/error.hpp"
#include "sphtest/rng.hpp"

namespace sphtest {

namespace {

constexpr double kPoissonTail = 1e-12;

void check_ncx2(double df, double xi) {
  if (!(df > 0)) throw DomainError("chi-square degrees of freedom must be > 0");
  if (!(xi >= 0) || !std::isfinite(xi)) throw DomainError("noncentrality must be finite and >= 0");
}

// sum_j Pois(j; xi/2) term(j) for terms in [0, 1], walking out from the mode
// until the Poisson mass left on either side is below kPoissonTail relative to
// the running sum.
template <class Term>
double poisson_series(double xi, Term&& term) {
  const double lambda = 0.5 * xi;
  const long j0 = static_cast<long>(std::floor(lambda));
  const double w0 = std::exp(-lambda + j0 * std::log(lambda) - std::lgamma(j0 + 1.0));
  double sum = w0 * term(j0);
  double wdown = w0, wup = w0;
  long down = j0, up = j0;
  bool down_done = down == 0, up_done = false;
  while (!(down_done && up_done)) {
    if (!down_done) {
      wdown *= down / lambda;
      --down;
      sum += wdown * term(down);
      // Remaining lower mass is at most wdown * r / (1 - r), r = down / lambda.
      const double r = down / lambda;
      down_done = down == 0 || wdown == 0.0 || (r < 1 && wdown * r / (1 - r) <= kPoissonTail * sum);
    }
    if (!up_done) {
      wup *= lambda / (up + 1);
      ++up;
      sum += wup * term(up);
      const double r = lambda / (up + 1);
      up_done = wup == 0.0 || (r < 1 && wup * r / (1 - r) <= kPoissonTail * sum);
    }
    if (up - j0 > 100'000'000) throw NumericalError("noncentral chi-square series did not converge");
  }
  return sum;
}

}  // namespace

double ncx2_cdf(double df, double xi, double x) {
  check_ncx2(df, xi);
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (xi == 0) return boost::math::gamma_p(0.5 * df, 0.5 * x);
  return std::clamp(poisson_series(xi, [&](long j) { return boost::math::gamma_p(0.5 * df + j, 0.5 * x); }),
                    0.0, 1.0);
}

double ncx2_sf(double df, double xi, double x) {
  check_ncx2(df, xi);
  if (x <= 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (xi == 0) return boost::math::gamma_q(0.5 * df, 0.5 * x);
  return std::clamp(poisson_series(xi, [&](long j) { return boost::math::gamma_q(0.5 * df + j, 0.5 * x); }),
                    0.0, 1.0);
}

double ncx2_upper_quantile(double df, double xi, double upper) {
  check_ncx2(df, xi);
  if (!(upper > 0 && upper < 1)) throw DomainError("tail probability must lie in (0, 1)");
  double lo = 0.0;
  double hi = df + xi + 10.0 * std::sqrt(2.0 * (df + 2.0 * xi)) + 10.0;
  while (ncx2_sf(df, xi, hi) > upper) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("noncentral chi-square quantile bracket failed");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ncx2_sf(df, xi, mid) > upper) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MixtureLaw::MixtureLaw(int p, std::vector<MixtureTerm> terms, double tail_bound, std::size_t draws,
                       std::uint64_t seed)
    : p_(p),
      terms_(std::move(terms)),
      tail_bound_(tail_bound),
      draws_(draws),
      seed_(seed),
      cache_(std::make_shared<Cache>()) {
  if (p < 2) throw DomainError("dimension p must be >= 2");
  if (terms_.empty()) throw DomainError("mixture law needs at least one term");
  for (const auto& t : terms_) {
    if (!(t.weight > 0) || !std::isfinite(t.weight)) throw DomainError("mixture weights must be > 0");
    if (t.df < 1) throw DomainError("mixture degrees of freedom must be >= 1");
    if (!(t.xi >= 0) || !std::isfinite(t.xi)) throw DomainError("noncentrality must be finite and >= 0");
  }
  if (draws_ < 100'000) throw DomainError("mixture Monte Carlo needs at least 1e5 draws");
}

bool MixtureLaw::central() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const MixtureTerm& t) { return t.xi == 0; });
}

std::span<const double> MixtureLaw::sample() const {
  std::call_once(cache_->once, [this] {
    auto& out = cache_->sorted;
    out.resize(draws_);
    constexpr std::size_t kBlock = 1 << 16;
    std::normal_distribution<double> normal;
    for (std::size_t start = 0, block = 0; start < draws_; start += kBlock, ++block) {
      CounterRng rng(stream_key(seed_, {0x4D49ull, block}));
      const std::size_t stop = std::min(draws_, start + kBlock);
      for (std::size_t i = start; i < stop; ++i) {
        double x = 0.0;
        for (const auto& t : terms_) {
          double y = 0.0;
          if (t.xi > 0) {
            const double z = normal(rng) + std::sqrt(t.xi);
            y = z * z;
            if (t.df > 1) y += std::gamma_distribution<double>(0.5 * (t.df - 1), 2.0)(rng);
          } else {
            y = std::gamma_distribution<double>(0.5 * t.df, 2.0)(rng);
          }
          x += t.weight * y;
        }
        out[i] = x;
      }
    }
    std::sort(out.begin(), out.end());
  });
  return cache_->sorted;
}

Estimate MixtureLaw::quantile_mc(double alpha) const {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  const auto s = sample();
  const auto n = s.size();
  const auto idx = std::min(n - 1, static_cast<std::size_t>(std::ceil((1.0 - alpha) * n)) - 1);
  const auto m = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const auto lo = idx >= m ? idx - m : 0;
  const auto hi = std::min(n - 1, idx + m);
  // Order-statistic SE with the density estimated from a spacing.
  const double spread = (s[hi] - s[lo]) / static_cast<double>(hi - lo);
  const double se = std::sqrt(alpha * (1 - alpha) * n) * spread;
  return {s[idx], se};
}

Estimate MixtureLaw::tail_mc(double c) const {
  const auto s = sample();
  const auto above = static_cast<double>(s.end() - std::upper_bound(s.begin(), s.end(), c));
  const double prob = above / s.size();
  return {prob, std::sqrt(prob * (1 - prob) / s.size())};
}

Estimate MixtureLaw::quantile(double alpha) const {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (!single_term()) return quantile_mc(alpha);
  const auto& t = terms_.front();
  return {t.weight * ncx2_upper_quantile(t.df, t.xi, alpha), 0.0};
}

Estimate MixtureLaw::tail(double c) const {
  if (!single_term()) return tail_mc(c);
  const auto& t = terms_.front();
  return {ncx2_sf(t.df, t.xi, c / t.weight), 0.0};
}

std::string MixtureLaw::describe() const {
  std::string out;
  for (const auto& t : terms_) {
    if (!out.empty()) out += "+";
    out += detail::fmt(t.weight) + "*chi2_" + std::to_string(t.df) + "(" + detail::fmt(t.xi) + ")";
  }
  return out;
}

}  // namespace sphtest
