#include "sphtest/harmonics.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "sphtest/error.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest::harmonics {

namespace {

void check_dim(int p) {
  if (p < 2 || p > kMaxDim) {
    throw DomainError("dimension p must lie in [2, " + std::to_string(kMaxDim) + "]");
  }
}

void check_degree(int k) {
  if (k < 1 || k > kMaxDegree) {
    throw DomainError("harmonic degree k must lie in [1, " + std::to_string(kMaxDegree) +
                      "]; degree 0 is the constant function");
  }
}

double log_poch(double a, int n) { return std::lgamma(a + n) - std::lgamma(a); }

void enumerate(int p, int pos, int remaining, std::vector<int>& m, std::vector<MultiIndex>& out) {
  if (pos == p - 2) {
    // Last two coordinates: m_{p-1} descending, m_p = remaining - m_{p-1} in {0, 1}.
    for (int a = remaining; a >= 0; --a) {
      const int last = remaining - a;
      if (last > 1) break;
      m[p - 2] = a;
      m[p - 1] = last;
      out.push_back({m, 0.0});
    }
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    m[pos] = a;
    enumerate(p, pos + 1, remaining - a, m, out);
  }
}

double log_b(int p, const std::vector<int>& m) {
  // suffix[j] = m_{j+1} + ... + m_p in 1-based terms, i.e. sum of m[j..p-1].
  std::vector<int> suffix(p + 1, 0);
  for (int i = p - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + m[i];
  double lb = (m[p - 2] + m[p - 1] > 0) ? std::log(2.0) : 0.0;
  for (int j = 1; j <= p - 2; ++j) {
    const int mj = m[j - 1];
    const int tail = suffix[j];  // |m^{j+1}|
    const double lambda = tail + 0.5 * (p - j - 1);
    lb += std::lgamma(mj + 1.0) + log_poch(0.5 * (p - j + 1), tail) + std::log(mj + lambda) -
          log_poch(2.0 * lambda, mj) - log_poch(0.5 * (p - j), tail) - std::log(lambda);
  }
  return lb;
}

// Three-term recurrence without argument checks; lambda > 0, deg >= 1, |t| <= 1.
inline double gegenbauer_fast(double lambda, int deg, double t) {
  double prev = 1.0, cur = 2.0 * lambda * t;
  for (int q = 1; q < deg; ++q) {
    const double next = (2.0 * t * (q + lambda) * cur - (q + 2.0 * lambda - 1.0) * prev) / (q + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

PointTrig::PointTrig(std::span<const double> x) : p_(static_cast<int>(x.size())) {
  check_dim(p_);
  // rho[i] = |(x_1, ..., x_i)|
  std::array<double, kMaxDim + 1> rho;
  double sq = 0.0;
  rho[0] = 0.0;
  for (int i = 1; i <= p_; ++i) {
    sq += x[i - 1] * x[i - 1];
    rho[i] = std::sqrt(sq);
  }
  if (std::abs(rho[p_] - 1.0) >= 1e-8) {
    throw DataError("point is not on the unit sphere (norm " + std::to_string(rho[p_]) + ")");
  }
  for (int i = 1; i <= p_ - 1; ++i) {
    const double r = rho[i + 1];
    if (r == 0.0) {  // pole: the angle is conventionally 0
      cos_[i - 1] = 1.0;
      sin_[i - 1] = 0.0;
    } else if (i == 1) {
      cos_[0] = x[1] / r;
      sin_[0] = x[0] / r;
    } else {
      cos_[i - 1] = x[i] / r;
      sin_[i - 1] = rho[i] / r;
    }
  }
}

HypersphericalCoords to_hyperspherical(std::span<const double> x) {
  const PointTrig trig(x);
  const int p = trig.dim();
  HypersphericalCoords coords;
  coords.theta.resize(p - 1);
  for (int i = 1; i <= p - 1; ++i) {
    double angle = std::atan2(trig.sin_theta(i), trig.cos_theta(i));
    if (i == 1 && angle < 0) angle += 2.0 * std::numbers::pi;
    coords.theta[i - 1] = angle;
  }
  // Below a pole every lower angle is 0.
  for (int i = p - 1; i >= 2; --i) {
    if (trig.sin_theta(i) == 0.0) {
      for (int j = 1; j < i; ++j) coords.theta[j - 1] = 0.0;
      break;
    }
  }
  return coords;
}

std::vector<double> from_hyperspherical(const HypersphericalCoords& coords) {
  const int p = static_cast<int>(coords.theta.size()) + 1;
  check_dim(p);
  std::vector<double> x(p);
  double scale = 1.0;  // sin theta_{p-1} ... sin theta_{i+1}
  for (int i = p - 1; i >= 1; --i) {
    const double th = coords.theta[i - 1];
    if (i >= 2) {
      x[i] = scale * std::cos(th);
      scale *= std::sin(th);
    } else {
      x[1] = scale * std::cos(th);
      x[0] = scale * std::sin(th);
    }
  }
  return x;
}

const std::vector<MultiIndex>& multi_indices(int p, int k) {
  check_dim(p);
  check_degree(k);
  if (p == 2) throw DomainError("multi-index bases are defined for p >= 3");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<const std::vector<MultiIndex>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{p, k}];
  if (!slot) {
    const auto d = specfun::harmonic_dim(p, k);
    if (d > 2'000'000) throw DomainError("harmonic space too large to enumerate");
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(d));
    std::vector<int> m(p, 0);
    enumerate(p, 0, k, m, out);
    for (auto& mi : out) mi.log_b = log_b(p, mi.m);
    if (static_cast<std::int64_t>(out.size()) != d) {
      throw NumericalError("multi-index enumeration does not match d_{p,k}");
    }
    slot = std::make_unique<const std::vector<MultiIndex>>(std::move(out));
  }
  return *slot;
}

HarmonicBasis::HarmonicBasis(int p, int k) : p_(p), k_(k) {
  check_dim(p);
  check_degree(k);
  if (p == 2) {
    size_ = 2;
    return;
  }
  const auto& indices = multi_indices(p, k);
  size_ = indices.size();
  terms_.reserve(size_);
  for (const auto& mi : indices) {
    const auto& m = mi.m;
    Term term;
    term.sqrt_b = std::exp(0.5 * mi.log_b);
    term.sine = m[p - 1] == 1;
    term.freq = term.sine ? m[p - 2] + 1 : m[p - 2];
    int tail = 0;
    for (int i = 1; i < p; ++i) tail += m[i];
    for (int j = 1; j <= p - 2; ++j) {
      term.degree.push_back(m[j - 1]);
      term.lambda.push_back(tail + 0.5 * (p - j - 1));
      term.sine_power.push_back(tail);
      tail -= m[j];
    }
    terms_.push_back(std::move(term));
  }
}

void HarmonicBasis::eval(const PointTrig& trig, std::span<double> out) const {
  if (trig.dim() != p_) throw DomainError("point dimension does not match the basis");
  if (out.size() < size_) throw DomainError("output span too small for the basis");

  // cos(n theta_1), sin(n theta_1) for n = 0..k+1 by complex multiplication.
  const double c1 = trig.cos_theta(1), s1 = trig.sin_theta(1);
  std::array<double, kMaxDegree + 2> cn, sn;
  cn[0] = 1.0;
  sn[0] = 0.0;
  for (int n = 1; n <= k_ + 1; ++n) {
    cn[n] = cn[n - 1] * c1 - sn[n - 1] * s1;
    sn[n] = sn[n - 1] * c1 + cn[n - 1] * s1;
  }
  if (p_ == 2) {
    out[0] = std::numbers::sqrt2 * cn[k_];
    out[1] = std::numbers::sqrt2 * sn[k_];
    return;
  }

  // sinpow[j][e] = sin(theta_{p-j})^e, cosines[j] = cos(theta_{p-j}).
  std::array<std::array<double, kMaxDegree + 1>, kMaxDim> sinpow;
  std::array<double, kMaxDim> cosines;
  for (int j = 1; j <= p_ - 2; ++j) {
    const double s = trig.sin_theta(p_ - j);
    cosines[j] = trig.cos_theta(p_ - j);
    sinpow[j][0] = 1.0;
    for (int e = 1; e <= k_; ++e) sinpow[j][e] = sinpow[j][e - 1] * s;
  }

  for (std::size_t r = 0; r < size_; ++r) {
    const Term& term = terms_[r];
    double v = term.sqrt_b * (term.sine ? sn[term.freq] : cn[term.freq]);
    for (int j = 1; j <= p_ - 2 && v != 0.0; ++j) {
      const int deg = term.degree[j - 1];
      v *= sinpow[j][term.sine_power[j - 1]];
      if (deg > 0) v *= gegenbauer_fast(term.lambda[j - 1], deg, cosines[j]);
    }
    out[r] = v;
  }
}

void HarmonicBasis::eval(std::span<const double> x, std::span<double> out) const {
  eval(PointTrig(x), out);
}

HarmonicVector basis_eval(int p, int k, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p) throw DomainError("point dimension does not match p");
  const HarmonicBasis basis(p, k);
  HarmonicVector result{p, k, std::vector<double>(basis.size())};
  basis.eval(x, result.values);
  return result;
}

double addition_kernel(int p, int k, double s) {
  if (p < 2) throw DomainError("dimension p must be >= 2");
  if (k < 1) throw DomainError("addition kernel requires k >= 1");
  if (p == 2) return 2.0 * specfun::gegenbauer(0.0, k, s);
  return (1.0 + 2.0 * k / (p - 2)) * specfun::gegenbauer(specfun::gegen_lambda(p), k, s);
}

}  // namespace sphtest::harmonics
