#include "sphtest/sobolev.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "format.hpp"
#include "sphtest/error.hpp"
#include "sphtest/specfun.hpp"

namespace sphtest {

namespace {

constexpr int kRuleScan = 4096;

double harmonic_dim_real(int p, int k) {
  if (k <= specfun::kMaxDegree) return static_cast<double>(specfun::harmonic_dim(p, k));
  // (2k+p-2)/(k+p-2) * C(k+p-2, p-2)
  return (2.0 * k + p - 2) / (k + p - 2.0) *
         std::exp(std::lgamma(k + p - 1.0) - std::lgamma(p - 1.0) - std::lgamma(k + 1.0));
}

double kernel_factor(int p, int k) { return p == 2 ? 2.0 : 1.0 + 2.0 * k / (p - 2); }

// Pairwise summation, so the result does not depend on how rows were produced.
double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const auto half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

void check_nonempty(const SphericalSample& sample) {
  if (sample.size() == 0) throw DataError("empty sample");
}

}  // namespace

WeightSequence WeightSequence::finite(std::vector<double> v, std::string name) {
  if (v.empty() || std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    throw DomainError("weight sequence needs at least one nonzero entry");
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError("weights must be finite");
  }
  while (v.back() == 0.0) v.pop_back();
  if (static_cast<int>(v.size()) > specfun::kMaxDegree) {
    throw DomainError("weight sequences are limited to degrees k <= 30");
  }
  WeightSequence w;
  if (name.empty()) {
    for (std::size_t k = 0; k < v.size(); ++k) name += (k ? "," : "") + detail::fmt(v[k]);
  }
  w.name_ = std::move(name);
  w.v_ = std::move(v);
  return w;
}

WeightSequence WeightSequence::infinite(std::function<double(int)> rule, std::string name) {
  if (!rule) throw DomainError("infinite weight sequence needs a rule");
  WeightSequence w;
  w.name_ = std::move(name);
  w.rule_ = std::move(rule);
  return w;
}

WeightSequence WeightSequence::named(const std::string& name) {
  if (name == "rayleigh") return finite({1.0}, name);
  if (name == "bingham") return finite({0.0, 1.0}, name);
  if (name == "3-test") return finite({0.0, 0.0, 1.0}, name);
  throw DomainError("unknown weight sequence '" + name + "' (expected rayleigh, bingham, 3-test or v1,v2,...)");
}

WeightSequence WeightSequence::parse(const std::string& spec) {
  if (spec == "rayleigh" || spec == "bingham" || spec == "3-test") return named(spec);
  std::vector<double> v;
  const char* cur = spec.data();
  const char* end = spec.data() + spec.size();
  while (cur < end) {
    while (cur < end && *cur == ' ') ++cur;
    double x = 0;
    const auto [ptr, ec] = std::from_chars(cur, end, x);
    if (ec != std::errc()) throw DomainError("bad weight sequence '" + spec + "'");
    v.push_back(x);
    cur = ptr;
    while (cur < end && *cur == ' ') ++cur;
    if (cur < end) {
      if (*cur != ',') throw DomainError("bad weight sequence '" + spec + "'");
      ++cur;
      if (cur == end) throw DomainError("bad weight sequence '" + spec + "'");
    }
  }
  if (v.empty()) throw DomainError("empty weight sequence");
  return finite(std::move(v));
}

WeightSequence::Truncation WeightSequence::truncate(int p) const {
  if (p < 2 || p > harmonics::kMaxDim) throw DomainError("dimension p must lie in [2, 20]");
  Truncation out;
  if (is_finite()) {
    out.v = v_;
    for (std::size_t k = 0; k < v_.size(); ++k) {
      out.total_mass += v_[k] * v_[k] * harmonic_dim_real(p, static_cast<int>(k) + 1);
    }
    return out;
  }
  std::vector<double> v(kRuleScan), mass(kRuleScan);
  for (int k = 1; k <= kRuleScan; ++k) {
    v[k - 1] = rule_(k);
    if (!std::isfinite(v[k - 1])) throw DomainError("weight rule returned a non-finite value");
    mass[k - 1] = v[k - 1] * v[k - 1] * harmonic_dim_real(p, k);
  }
  // Tail beyond the scan: geometric if the term ratio settles below 1,
  // otherwise a power law k^{-s} with s > 1.
  const double last = mass[kRuleScan - 1];
  double beyond = 0.0;
  if (last > 0) {
    const double ratio = last / mass[kRuleScan - 2];
    const double s = -std::log(last / mass[kRuleScan / 2 - 1]) / std::log(2.0);
    if (ratio < 1.0 - 1e-3) {
      beyond = last * ratio / (1.0 - ratio);
    } else if (s > 1.05) {
      beyond = last * kRuleScan / (s - 1.0);
    } else {
      throw DomainError("weight rule '" + name_ + "' does not satisfy sum v_k^2 d_{p,k} < infinity");
    }
  }
  std::vector<double> tail(kRuleScan + 1, 0.0);  // tail[K] = sum_{k>K}
  tail[kRuleScan] = beyond;
  for (int k = kRuleScan; k >= 1; --k) tail[k - 1] = tail[k] + mass[k - 1];
  out.total_mass = tail[0];
  if (!(out.total_mass > 0)) throw DomainError("weight sequence needs at least one nonzero entry");
  int K = 1;
  while (tail[K] >= kTailTolerance * out.total_mass) ++K;
  if (K > specfun::kMaxDegree) {
    throw DomainError("weight rule '" + name_ + "' needs more than 30 terms to reach the tail tolerance");
  }
  out.v.assign(v.begin(), v.begin() + K);
  while (!out.v.empty() && out.v.back() == 0.0) out.v.pop_back();
  if (out.v.empty()) throw DomainError("truncated weight sequence is identically zero");
  out.tail_mass = tail[K];
  return out;
}

int WeightSequence::k_v(int p) const {
  const auto t = truncate(p);
  for (std::size_t k = 0; k < t.v.size(); ++k) {
    if (t.v[k] != 0.0) return static_cast<int>(k) + 1;
  }
  throw DomainError("weight sequence is identically zero");
}

int WeightSequence::K_v(int p) const { return static_cast<int>(truncate(p).v.size()); }

double stat_kernel(const SphericalSample& sample, const WeightSequence& weights) {
  check_nonempty(sample);
  const int p = sample.dim();
  const auto t = weights.truncate(p);
  const int K = static_cast<int>(t.v.size());
  const double lambda = specfun::gegen_lambda(p);
  std::vector<double> coef(K + 1, 0.0);
  for (int k = 1; k <= K; ++k) coef[k] = t.v[k - 1] * t.v[k - 1] * kernel_factor(p, k);
  std::vector<double> poly(K + 1);
  auto kernel = [&](double s) {
    specfun::gegenbauer_all(lambda, K, std::clamp(s, -1.0, 1.0), poly);
    double h = 0.0;
    for (int k = 1; k <= K; ++k) h += coef[k] * poly[k];
    return h;
  };

  const std::size_t n = sample.size();
  std::vector<double> rows(n), terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = sample.row(i);
    terms[0] = kernel(1.0);
    std::size_t used = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto w = sample.row(j);
      double s = 0.0;
      for (int c = 0; c < p; ++c) s += u[c] * w[c];
      terms[used++] = 2.0 * kernel(s);
    }
    rows[i] = pairwise_sum(std::span<const double>(terms).first(used));
  }
  return pairwise_sum(rows) / static_cast<double>(n);
}

SobolevStatistic::SobolevStatistic(int p, const WeightSequence& weights) : p_(p) {
  const auto t = weights.truncate(p);
  tail_mass_ = t.tail_mass;
  for (std::size_t k = 0; k < t.v.size(); ++k) {
    if (t.v[k] == 0.0) continue;
    weight_.push_back(t.v[k] * t.v[k]);
    bases_.emplace_back(p, static_cast<int>(k) + 1);
    total_ += bases_.back().size();
  }
}

double SobolevStatistic::operator()(std::span<const double> rows) const {
  const std::size_t n = rows.size() / static_cast<std::size_t>(p_);
  if (n == 0 || rows.size() % p_ != 0) throw DataError("empty or ragged sample");
  std::vector<double> acc(total_, 0.0), g(total_);
  for (std::size_t i = 0; i < n; ++i) {
    const harmonics::PointTrig trig(rows.subspan(i * p_, p_));
    std::size_t off = 0;
    for (const auto& basis : bases_) {
      basis.eval(trig, std::span<double>(g).subspan(off, basis.size()));
      off += basis.size();
    }
    for (std::size_t r = 0; r < total_; ++r) acc[r] += g[r];
  }
  double stat = 0.0;
  std::size_t off = 0;
  for (std::size_t b = 0; b < bases_.size(); ++b) {
    double sq = 0.0;
    for (std::size_t r = 0; r < bases_[b].size(); ++r) sq += acc[off + r] * acc[off + r];
    stat += weight_[b] * sq;
    off += bases_[b].size();
  }
  return stat / static_cast<double>(n);
}

double stat_harmonic(const SphericalSample& sample, const WeightSequence& weights) {
  check_nonempty(sample);
  return SobolevStatistic(sample.dim(), weights)(sample.data());
}

double rayleigh_stat(const SphericalSample& sample) {
  check_nonempty(sample);
  const int p = sample.dim();
  std::vector<double> sum(p, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto x = sample.row(i);
    for (int c = 0; c < p; ++c) sum[c] += x[c];
  }
  double sq = 0.0;
  for (double s : sum) sq += s * s;
  return p * sq / static_cast<double>(sample.size());
}

double bingham_stat(const SphericalSample& sample) {
  check_nonempty(sample);
  const int p = sample.dim();
  const double n = static_cast<double>(sample.size());
  std::vector<double> S(p * p, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto x = sample.row(i);
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) S[a * p + b] += x[a] * x[b];
    }
  }
  double tr = 0.0;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      const double d = S[a * p + b] / n - (a == b ? 1.0 / p : 0.0);
      tr += d * d;
    }
  }
  return n * p * (p + 2) / 2.0 * tr;
}

std::string TestResult::to_record() const {
  std::string out;
  auto kv = [&out](const char* key, const std::string& value) { out += std::string(key) + "=" + value + "\n"; };
  kv("test", test);
  kv("p", std::to_string(p));
  kv("n", std::to_string(n));
  kv("statistic", detail::fmt(statistic));
  kv("critical_value", detail::fmt(critical_value));
  kv("critical_se", detail::fmt(critical_se));
  kv("alpha", detail::fmt(alpha));
  kv("reject", reject ? "true" : "false");
  kv("pvalue", detail::fmt(pvalue));
  kv("pvalue_se", detail::fmt(pvalue_se));
  kv("law", law);
  kv("draws", std::to_string(draws));
  kv("seed", std::to_string(seed));
  kv("tail_bound", detail::fmt(tail_bound));
  return out;
}

TestResult run_test(const SphericalSample& sample, const WeightSequence& weights, double alpha,
                    const MixtureLaw& law) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (law.dim() != sample.dim()) {
    throw DomainError("law is for p=" + std::to_string(law.dim()) + " but the sample has p=" +
                      std::to_string(sample.dim()));
  }
  const auto t = weights.truncate(sample.dim());
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < t.v.size(); ++k) {
    if (t.v[k] == 0.0) continue;
    ++nonzero;
    const int deg = static_cast<int>(k) + 1;
    const double w = t.v[k] * t.v[k];
    const bool found = std::any_of(law.terms().begin(), law.terms().end(), [&](const MixtureTerm& term) {
      return term.k == deg && std::abs(term.weight - w) <= 1e-12 * w;
    });
    if (!found) throw DomainError("law does not match the weight sequence at degree " + std::to_string(deg));
  }
  if (nonzero != law.terms().size()) throw DomainError("law does not match the weight sequence");

  TestResult r;
  r.test = weights.name();
  r.p = sample.dim();
  r.n = sample.size();
  r.statistic = stat_harmonic(sample, weights);
  const auto crit = law.quantile(alpha);
  r.critical_value = crit.value;
  r.critical_se = crit.se;
  r.alpha = alpha;
  r.reject = rejects(r.statistic, r.critical_value);
  const auto pv = law.tail_mc(r.statistic);
  r.pvalue = pv.value;
  r.pvalue_se = pv.se;
  r.law = law.describe();
  r.draws = law.draws();
  r.seed = law.seed();
  r.tail_bound = std::max(law.tail_bound(), t.tail_mass);
  return r;
}

}  // namespace sphtest
