#include "sphtest/rotsym.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "sphtest/error.hpp"
#include "sphtest/harmonics.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest {

// ---------------------------------------------------------------------------
// AngularFunction

AngularFunction AngularFunction::vmf() { return {Kind::vmf, 1, "vmf"}; }
AngularFunction AngularFunction::watson() { return {Kind::watson, 2, "watson"}; }
AngularFunction AngularFunction::cauchy() { return {Kind::cauchy, 0, "cauchy"}; }

AngularFunction AngularFunction::power(int b) {
  if (b < 1) throw DomainError("power angular function needs an integer b >= 1");
  return {Kind::power, b, "power_" + std::to_string(b)};
}

AngularFunction AngularFunction::custom(std::string name, std::function<double(double)> eval,
                                        std::vector<double> derivs) {
  if (!eval) throw DomainError("custom angular function needs an evaluator");
  if (derivs.empty() || derivs[0] != 1.0) {
    throw DomainError("custom angular function must satisfy f(0) = 1 (derivs[0] == 1)");
  }
  if (std::abs(eval(0.0) - 1.0) > 1e-12) throw DomainError("custom angular function has f(0) != 1");
  AngularFunction f(Kind::custom, 0, std::move(name));
  f.custom_eval_ = std::move(eval);
  f.custom_derivs_ = std::move(derivs);
  return f;
}

AngularFunction AngularFunction::parse(const std::string& name, int b) {
  if (name == "vmf") return vmf();
  if (name == "watson") return watson();
  if (name == "cauchy") return cauchy();
  if (name == "power") {
    if (b < 1) throw DomainError("angular function 'power' needs --b >= 1");
    return power(b);
  }
  if (name.rfind("power_", 0) == 0) {
    int parsed = 0;
    const char* first = name.data() + 6;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, parsed);
    if (ec != std::errc() || ptr != last) throw DomainError("bad angular function: " + name);
    return power(parsed);
  }
  throw DomainError("unknown angular function: " + name);
}

double AngularFunction::operator()(double s) const {
  switch (kind_) {
    case Kind::vmf:
      return std::exp(s);
    case Kind::watson:
      return std::exp(s * s);
    case Kind::power: {
      double sb = 1.0;
      for (int i = 0; i < b_; ++i) sb *= s;
      return std::exp(sb);
    }
    case Kind::cauchy:
      return 1.0 / (1.0 + 2.0 * s);
    case Kind::custom:
      return custom_eval_(s);
  }
  return 0.0;
}

int AngularFunction::max_order() const {
  if (kind_ == Kind::custom) return static_cast<int>(custom_derivs_.size()) - 1;
  return specfun::kMaxDegree;
}

double AngularFunction::deriv0(int k) const {
  if (k < 0) throw DomainError("derivative order must be >= 0");
  if (k > max_order()) {
    throw DomainError("derivative f^(" + std::to_string(k) + ")(0) of '" + name_ +
                      "' is not available");
  }
  auto factorial = [](int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
  };
  switch (kind_) {
    case Kind::vmf:
    case Kind::watson:
    case Kind::power:
      // exp(s^b) = sum_j s^{bj} / j!
      return (k % b_ == 0) ? factorial(k) / factorial(k / b_) : 0.0;
    case Kind::cauchy:
      return ((k % 2 == 0) ? 1.0 : -1.0) * std::ldexp(factorial(k), k);
    case Kind::custom:
      return custom_derivs_[k];
  }
  return 0.0;
}

bool AngularFunction::symmetric() const {
  switch (kind_) {
    case Kind::vmf:
    case Kind::cauchy:
      return false;
    case Kind::watson:
      return true;
    case Kind::power:
      return b_ % 2 == 0;
    case Kind::custom:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Quadrature under the latitude weight

namespace {

/// int g(s) (1 - s^2)^((p-3)/2) ds with order 64, checked against order 128 and
/// refined to order 256 if the two disagree.
double latitude_integral(int p, const std::function<double(double)>& g) {
  const auto& r128 = specfun::cached_rule(p, 128);
  const double i64 = specfun::cached_rule(p, 64).integrate(g);
  const double i128 = r128.integrate(g);
  // Convergence is judged relative to int |g|, so integrals that vanish by symmetry pass.
  const double scale = std::max(r128.integrate([&](double s) { return std::abs(g(s)); }), 1e-300);
  if (std::abs(i64 - i128) <= 1e-10 * scale) return i128;
  const double i256 = specfun::cached_rule(p, 256).integrate(g);
  if (std::abs(i256 - i128) > 1e-8 * scale) {
    throw NumericalError("latitude quadrature did not converge at order 256");
  }
  return i256;
}

void check_positive(int p, double kappa, const AngularFunction& f) {
  if (kappa < 0) throw DomainError("concentration kappa must be >= 0");
  for (double s : specfun::cached_rule(p, 256).nodes) {
    const double v = f(kappa * s);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("angular function '" + f.name() + "' is not positive on the range kappa*s");
    }
  }
  for (double s : {-1.0, 1.0}) {
    const double v = f(kappa * s);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("angular function '" + f.name() + "' is not positive on the range kappa*s");
    }
  }
}

}  // namespace

double normalizing_constant(int p, double kappa, const AngularFunction& f) {
  check_positive(p, kappa, f);
  return 1.0 / latitude_integral(p, [&](double s) { return f(kappa * s); });
}

double projection_expectation(int p, double kappa, const AngularFunction& f,
                              const std::function<double(double)>& g) {
  const double c = normalizing_constant(p, kappa, f);
  return c * latitude_integral(p, [&](double s) { return g(s) * f(kappa * s); });
}

double t_moment_oracle(int p, double kappa, const AngularFunction& f, int m) {
  if (m < 0) throw DomainError("moment order must be >= 0");
  return projection_expectation(p, kappa, f, [m](double s) { return std::pow(s, m); });
}

// ---------------------------------------------------------------------------
// SphericalSample

SphericalSample::SphericalSample(int p, std::vector<double> rows) : p_(p), rows_(std::move(rows)) {
  if (p < 2) throw DataError("sample dimension must be >= 2");
  if (rows_.size() % static_cast<std::size_t>(p) != 0) {
    throw DataError("sample storage is not a whole number of rows");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    double sq = 0.0;
    for (double v : row(i)) sq += v * v;
    if (!(std::abs(std::sqrt(sq) - 1.0) <= kUnitTolerance)) {
      throw DataError("row " + std::to_string(i + 1) + " is not a unit vector (norm " +
                      std::to_string(std::sqrt(sq)) + ")");
    }
  }
}

void SphericalSample::write_csv(std::ostream& os) const {
  for (int j = 1; j <= p_; ++j) os << (j > 1 ? "," : "") << 'x' << j;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = row(i);
    for (int j = 0; j < p_; ++j) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r[j]);
      if (j > 0) os << ',';
      os.write(buf, end - buf);
    }
    os << '\n';
  }
}

SphericalSample SphericalSample::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty sample file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int p = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      ++p;
      if (cell != "x" + std::to_string(p)) {
        throw DataError("bad sample header: expected x1,...,xp, got '" + line + "'");
      }
    }
  }
  if (p < 2) throw DataError("sample header must list at least two columns");
  std::vector<double> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int cols = 0;
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      double v = 0.0;
      while (cur < end && *cur == ' ') ++cur;
      auto [ptr, ec] = std::from_chars(cur, end, v);
      if (ec != std::errc()) throw DataError("bad number on line " + std::to_string(lineno));
      rows.push_back(v);
      ++cols;
      cur = ptr;
      while (cur < end && *cur == ' ') ++cur;
      if (cur == end) break;
      if (*cur != ',') throw DataError("bad separator on line " + std::to_string(lineno));
      ++cur;
    }
    if (cols != p) {
      throw DataError("line " + std::to_string(lineno) + " has " + std::to_string(cols) +
                      " columns, expected " + std::to_string(p));
    }
  }
  if (rows.empty()) throw DataError("sample file has no observations");
  return SphericalSample(p, std::move(rows));
}

// ---------------------------------------------------------------------------
// Samplers

RotSymSampler::RotSymSampler(const RotSymConfig& config)
    : p_(config.p), kappa_(config.kappa), f_(config.f) {
  if (p_ < 2 || p_ > harmonics::kMaxDim) throw DomainError("dimension p must lie in [2, 20]");
  if (f_.kind() == AngularFunction::Kind::cauchy && kappa_ >= 0.5) {
    throw DomainError("cauchy angular function requires kappa < 1/2");
  }
  if (!config.theta.empty()) {
    if (static_cast<int>(config.theta.size()) != p_) throw DomainError("location theta has wrong dimension");
    double sq = 0.0;
    for (double v : config.theta) sq += v * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-10) throw DomainError("location theta is not a unit vector");
    // Householder reflection exchanging e_p and theta.
    std::vector<double> v(config.theta.size());
    for (int i = 0; i < p_; ++i) v[i] = -config.theta[i];
    v[p_ - 1] += 1.0;
    double vv = 0.0;
    for (double a : v) vv += a * a;
    if (vv > 0.0) {
      const double inv = 1.0 / std::sqrt(vv);
      for (double& a : v) a *= inv;
      householder_ = std::move(v);
    }
  }

  const double c = normalizing_constant(p_, kappa_, f_);

  // Envelope M = sup f(kappa s): grid search, then golden-section refinement
  // inside the bracket around the best grid point.
  constexpr int kGrid = 1024;
  int best = 0;
  double best_val = -1.0;
  auto node = [](int i) { return -1.0 + 2.0 * i / (kGrid - 1); };
  for (int i = 0; i < kGrid; ++i) {
    const double v = f_(kappa_ * node(i));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = node(std::max(best - 1, 0));
  double hi = node(std::min(best + 1, kGrid - 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f_(kappa_ * x1), f2 = f_(kappa_ * x2);
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f_(kappa_ * x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f_(kappa_ * x2);
    }
  }
  envelope_ = std::max({best_val, f1, f2}) * (1.0 + 1e-12);

  // Acceptance = E_null[f(kappa t)] / M = (c_p / c_{p,kappa,f}) / M.
  acceptance_ = specfun::sphere_constant(p_) / (c * envelope_);
  if (acceptance_ < 1e-6) {
    throw DomainError("rejection acceptance rate " + std::to_string(acceptance_) +
                      " is below 1e-6: kappa is too large for this sampler");
  }
}

double RotSymSampler::draw_projection(CounterRng& rng) const {
  // Null law of t = U'theta is 2B - 1 with B ~ Beta((p-1)/2, (p-1)/2).
  switch (p_) {
    case 2:
      return std::cos(std::numbers::pi * rng.uniform01());  // arcsine law
    case 3:
      return 2.0 * rng.uniform01() - 1.0;  // Beta(1, 1)
    default: {
      std::gamma_distribution<double> gamma(0.5 * (p_ - 1), 1.0);
      const double x = gamma(rng);
      const double y = gamma(rng);
      return 2.0 * x / (x + y) - 1.0;
    }
  }
}

void RotSymSampler::draw(CounterRng& rng, std::span<double> out) const {
  std::normal_distribution<double> normal;
  draw_impl(rng, normal, out);
}

void RotSymSampler::draw_impl(CounterRng& rng, std::normal_distribution<double>& normal,
                              std::span<double> out) const {
  double t;
  if (kappa_ == 0.0) {
    t = draw_projection(rng);
  } else {
    while (true) {
      t = draw_projection(rng);
      if (rng.uniform01() * envelope_ < f_(kappa_ * t)) break;
    }
  }
  const double radial = std::sqrt(std::max(0.0, 1.0 - t * t));
  if (p_ == 2) {
    out[0] = (rng() >> 63) ? radial : -radial;
  } else {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (int i = 0; i < p_ - 1; ++i) {
        out[i] = normal(rng);
        sq += out[i] * out[i];
      }
    } while (sq == 0.0);
    const double scale = radial / std::sqrt(sq);
    for (int i = 0; i < p_ - 1; ++i) out[i] *= scale;
  }
  out[p_ - 1] = t;

  if (!householder_.empty()) {
    double dot = 0.0;
    for (int i = 0; i < p_; ++i) dot += householder_[i] * out[i];
    for (int i = 0; i < p_; ++i) out[i] -= 2.0 * dot * householder_[i];
  }
}

void RotSymSampler::fill(StreamKey key, std::size_t n, std::span<double> out) const {
  if (out.size() < n * static_cast<std::size_t>(p_)) throw DomainError("output span too small");
  CounterRng rng(key);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) draw_impl(rng, normal, out.subspan(i * p_, p_));
}

SphericalSample sample_uniform(int p, std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
  if (p < 2) throw DomainError("dimension p must be >= 2");
  if (n < 1) throw DomainError("sample size must be >= 1");
  CounterRng rng(stream_key(seed, {0x0A11ull, replicate}));
  std::normal_distribution<double> normal;
  std::vector<double> rows(n * static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < n; ++i) {
    double* r = rows.data() + i * p;
    double sq = 0.0;
    do {
      sq = 0.0;
      for (int j = 0; j < p; ++j) {
        r[j] = normal(rng);
        sq += r[j] * r[j];
      }
    } while (sq == 0.0);
    const double inv = 1.0 / std::sqrt(sq);
    for (int j = 0; j < p; ++j) r[j] *= inv;
  }
  return SphericalSample(p, std::move(rows));
}

SphericalSample sample_rotsym(const RotSymConfig& config, std::size_t n, std::uint64_t replicate) {
  if (n < 1) throw DomainError("sample size must be >= 1");
  const RotSymSampler sampler(config);
  std::vector<double> rows(n * static_cast<std::size_t>(config.p));
  sampler.fill(sample_stream(config.seed, replicate), n, rows);
  return SphericalSample(config.p, std::move(rows));
}

}  // namespace sphtest
