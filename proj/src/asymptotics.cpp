#include "sphtest/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "format.hpp"
#include "sphtest/error.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest::asymptotics {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

void check_order(int t) {
  if (t < 0 || t > kMaxOrder) {
    throw DomainError("expansion order must lie in [0, " + std::to_string(kMaxOrder) + "]");
  }
}

void check_agree(double a, double b, const char* what) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (std::abs(a - b) > 1e-10 * scale) {
    throw NumericalError(std::string("closed forms of ") + what + " disagree: " + detail::fmt(a) + " vs " +
                         detail::fmt(b));
  }
}

}  // namespace

ExpansionSystem::ExpansionSystem(int p, const AngularFunction& f, int t) : p_(p), t_(t), f_(f) {
  if (p < 2) throw DomainError("dimension p must be >= 2");
  check_order(t);
  const int n = size();
  a_.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const int d = i - j;
      a_[i * n + j] = (d % 2 == 1) ? 0.0 : specfun::null_moment(p, d) * f.deriv0(d) / factorial(d);
    }
  }
}

std::vector<double> ExpansionSystem::v(int m) const {
  std::vector<double> out(size());
  for (int i = 0; i < size(); ++i) out[i] = specfun::null_moment(p_, m + i) * f_.deriv0(i) / factorial(i);
  return out;
}

std::vector<double> ExpansionSystem::z(int k) const {
  std::vector<double> out(size(), 0.0);
  for (int i = k; i < size(); ++i) {
    out[i] = specfun::monomial_to_gegenbauer(p_, i)[k] * f_.deriv0(i) / factorial(i);
  }
  return out;
}

std::vector<double> ExpansionSystem::solve(const std::vector<double>& rhs) const {
  const int n = size();
  if (static_cast<int>(rhs.size()) != n) throw DomainError("right-hand side has the wrong size");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    double s = rhs[i];
    for (int j = 0; j < i; ++j) s -= a_[i * n + j] * x[j];
    x[i] = s;  // unit diagonal
  }
  return x;
}

std::vector<double> ExpansionSystem::inverse() const {
  const int n = size();
  std::vector<double> inv(n * n, 0.0);
  for (int c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    const auto col = solve(e);
    for (int r = 0; r < n; ++r) inv[r * n + c] = col[r];
  }
  return inv;
}

std::vector<double> ExpansionSystem::inverse_neumann() const {
  const int n = size();
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(a_.data(), n,
                                                                                                    n);
  const Eigen::MatrixXd L = A - Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int j = 1; j <= t_; ++j) {
    term = -(term * L);
    sum += term;
  }
  if (!(term * L).isZero(0.0)) throw NumericalError("L is not nilpotent of index t+1");
  std::vector<double> out(n * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out[r * n + c] = sum(r, c);
  }
  return out;
}

std::vector<double> expansion_coeffs(int p, int m, int q, const AngularFunction& f) {
  if (m < 1 || q < m) throw DomainError("expansion needs q >= m >= 1");
  const ExpansionSystem sys(p, f, q - m);
  return sys.solve(sys.v(m));
}

std::vector<double> gegenbauer_expectation_coeffs(int p, int k, int r, const AngularFunction& f) {
  if (k < 1 || r < 0) throw DomainError("Gegenbauer expectation needs k >= 1 and r >= 0");
  const ExpansionSystem sys(p, f, k + r);
  const auto full = sys.solve(sys.z(k));
  const double t = specfun::t_factor(p, k);
  std::vector<double> out(full.begin() + k, full.end());
  for (double& c : out) c /= t * t;
  return out;
}

double noncentrality_standard(int p, int k, double tau, const AngularFunction& f) {
  if (k < 1) throw DomainError("noncentrality needs k >= 1");
  if (!(tau >= 0)) throw DomainError("tau must be >= 0");
  const long double fk = f.deriv0(k);
  const long double t = specfun::t_factor(p, k);
  const long double mkk = specfun::monomial_to_gegenbauer(p, k)[k];
  const long double tau2k = std::pow(static_cast<long double>(tau), 2 * k);
  long double kfact = 1, prod = 1;
  for (int l = 0; l < k; ++l) {
    kfact *= l + 1;
    prod *= (p + 2.0L * l) * (p + 2.0L * l);
  }
  const double form1 = static_cast<double>(mkk * mkk * fk * fk * tau2k / (kfact * kfact * t * t));
  const double form2 = static_cast<double>(specfun::harmonic_dim(p, k) * fk * fk * tau2k / prod);
  check_agree(form1, form2, "xi_{p,k}");
  return form1;
}

double noncentrality_delayed(int p, int k, int k_star, double tau, const AngularFunction& f) {
  if (k < 1 || k > k_star) throw DomainError("delayed noncentrality needs 1 <= k <= k_star");
  if ((k_star - k) % 2 != 0) throw DomainError("delayed noncentrality needs k and k_star of the same parity");
  if (!(tau >= 0)) throw DomainError("tau must be >= 0");
  const long double fk = f.deriv0(k_star);
  const long double t = specfun::t_factor(p, k);
  const long double mkks = specfun::monomial_to_gegenbauer(p, k_star)[k];
  const long double tau2k = std::pow(static_cast<long double>(tau), 2 * k_star);
  const long double kfact = factorial(k_star);
  const double form1 = static_cast<double>(mkks * mkks * fk * fk * tau2k / (kfact * kfact * t * t));

  // Alternating sum in extended precision; it cancels heavily for large k.
  const long double lambda = specfun::gegen_lambda(p);
  auto null_moment_ld = [p](int m) {
    long double a = 1;
    for (int r = 0; 2 * r < m; ++r) a *= (1 + 2.0L * r) / (p + 2.0L * r);
    return a;
  };
  long double sum = 0;
  for (int j = 0; 2 * j <= k; ++j) {
    // c_{k,j} = 2^{k-2j} (lambda)_{k-j} / (j! (k-2j)!), or its Chebyshev analogue.
    long double c = std::ldexp(1.0L, k - 2 * j);
    if (lambda > 0) {
      for (int i = 0; i < k - j; ++i) c *= lambda + i;
    } else {
      c *= 0.5L * k;
      for (int i = 1; i < k - j; ++i) c *= i;
    }
    for (int i = 2; i <= j; ++i) c /= i;
    for (int i = 2; i <= k - 2 * j; ++i) c /= i;
    const long double term = c * null_moment_ld(k + k_star - 2 * j);
    sum += (j % 2 == 0) ? term : -term;
  }
  const double form2 = static_cast<double>(t * t * fk * fk * tau2k * sum * sum / (kfact * kfact));
  check_agree(form1, form2, "xi_{p,k,k*}");
  return form1;
}

const char* to_string(ThresholdCase c) {
  switch (c) {
    case ThresholdCase::standard:
      return "standard";
    case ThresholdCase::delayed:
      return "delayed";
    case ThresholdCase::blind:
      return "blind";
  }
  return "blind";
}

std::string ThresholdReport::to_record() const {
  std::string out = std::string("case=") + to_string(kind) + ", q=" + std::to_string(q) + "\n";
  if (k_star) {
    out += "k_star=" + std::to_string(*k_star) + " k_dagger=" + std::to_string(*k_dagger) + " rate=n^(-1/" +
           std::to_string(*rate_ell()) + ")\n";
  } else {
    out += "blind_up_to_order=" + std::to_string(q) + " no power against kappa_n = n^(-1/" +
           std::to_string(2 * q) + ") tau\n";
  }
  out += "k_v=" + std::to_string(k_v) + "\n";
  return out;
}

int default_order(const AngularFunction& f) { return std::min(specfun::kMaxDegree, f.max_order()); }

ThresholdReport classify_threshold(const WeightSequence& weights, const AngularFunction& f, int q, int p) {
  const auto v = weights.truncate(p).v;
  ThresholdReport r;
  r.k_v = weights.k_v(p);
  r.q = q;
  if (q < r.k_v) throw DomainError("order q must be >= k_v = " + std::to_string(r.k_v));
  if (q > specfun::kMaxDegree) throw DomainError("order q must be <= 30");
  auto coef = [&](int l) { return l <= static_cast<int>(v.size()) ? v[l - 1] : 0.0; };
  for (int k = r.k_v; k <= q; ++k) {
    if (f.deriv0(k) == 0.0) continue;
    for (int l = r.k_v; l <= k; ++l) {
      if ((k - l) % 2 == 0 && coef(l) != 0.0) {
        r.k_star = k;
        r.k_dagger = l;
        r.kind = (k == r.k_v) ? ThresholdCase::standard : ThresholdCase::delayed;
        return r;
      }
    }
  }
  return r;
}

MixtureLaw null_law(const WeightSequence& weights, int p, const LawOptions& opts) {
  const auto t = weights.truncate(p);
  std::vector<MixtureTerm> terms;
  for (std::size_t i = 0; i < t.v.size(); ++i) {
    if (t.v[i] == 0.0) continue;
    const int k = static_cast<int>(i) + 1;
    terms.push_back({k, t.v[i] * t.v[i], specfun::harmonic_dim(p, k), 0.0});
  }
  return MixtureLaw(p, std::move(terms), t.tail_mass, opts.draws, opts.seed);
}

MixtureLaw limit_law(const WeightSequence& weights, int p, const AngularFunction& f, double tau, int ell,
                     const LawOptions& opts) {
  if (ell < 1) throw DomainError("rate exponent ell must be >= 1");
  if (!(tau >= 0)) throw DomainError("tau must be >= 0");
  const int k_v = weights.k_v(p);
  const int q = std::max(k_v, (ell + 1) / 2);
  if (q > default_order(f)) {
    throw DomainError("angular function '" + f.name() + "' lacks the derivatives needed for ell = " +
                      std::to_string(ell));
  }
  const auto report = classify_threshold(weights, f, q, p);
  auto law = null_law(weights, p, opts);
  if (!report.k_star || ell < 2 * *report.k_star) return law;  // all terms central
  const int ks = *report.k_star;
  if (ell > 2 * ks) {
    throw DomainError("rate n^(-1/" + std::to_string(ell) + ") is beyond the detection threshold n^(-1/" +
                      std::to_string(2 * ks) + "); the test is consistent and has no limit law there");
  }
  auto terms = law.terms();
  for (auto& term : terms) {
    if (term.k >= *report.k_dagger && term.k <= ks && (ks - term.k) % 2 == 0) {
      term.xi = noncentrality_delayed(p, term.k, ks, tau, f);
    }
  }
  return MixtureLaw(p, std::move(terms), law.tail_bound(), opts.draws, opts.seed);
}

PowerValue mixture_power(const MixtureLaw& null, const MixtureLaw& alt, double alpha) {
  const auto crit = null.quantile(alpha);
  PowerValue out;
  out.tail_bound = std::max(null.tail_bound(), alt.tail_bound());
  const auto tail = alt.tail(crit.value);
  out.power = tail.value;
  double var = tail.se * tail.se;
  if (crit.se > 0) {
    // Propagate the quantile error through the density of alt at the quantile.
    const auto s = alt.sample();
    const double h = std::max(crit.se, 1e-3 * crit.value);
    const auto lo = std::lower_bound(s.begin(), s.end(), crit.value - h);
    const auto hi = std::upper_bound(s.begin(), s.end(), crit.value + h);
    const double dens = static_cast<double>(hi - lo) / (2 * h * s.size());
    var += dens * dens * crit.se * crit.se;
  }
  out.se = std::sqrt(var);
  return out;
}

PowerValue asymptotic_power(const WeightSequence& weights, int p, const AngularFunction& f, double tau,
                            double alpha, const LawOptions& opts) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  const auto report = classify_threshold(weights, f, default_order(f), p);
  if (!report.k_star) {
    PowerValue out;
    out.power = alpha;
    out.trivial = true;
    out.note = "blind up to order " + std::to_string(report.q);
    return out;
  }
  const auto null = null_law(weights, p, opts);
  LawOptions alt_opts = opts;
  alt_opts.seed = mix64(opts.seed);
  const auto alt = limit_law(weights, p, f, tau, *report.rate_ell(), alt_opts);
  auto out = mixture_power(null, alt, alpha);
  if (!weights.is_finite() && report.kind == ThresholdCase::delayed) out.note = "extrapolated to an infinite sequence";
  return out;
}

}  // namespace sphtest::asymptotics
