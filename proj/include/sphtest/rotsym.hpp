#pragma once

// Rotationally symmetric laws on S^{p-1} with density c_{p,kappa,f} f(kappa u'theta)
// and the uniform law as the kappa = 0 special case.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sphtest/rng.hpp"

namespace sphtest {

/// Angular function f with f(0) = 1 and known derivatives at zero.
class AngularFunction {
 public:
  enum class Kind { vmf, watson, power, cauchy, custom };

  /// exp(s)
  static AngularFunction vmf();
  /// exp(s^2)
  static AngularFunction watson();
  /// exp(s^b), b >= 1
  static AngularFunction power(int b);
  /// 1 / (1 + 2s)
  static AngularFunction cauchy();
  /// User-supplied f with derivatives f^(0)(0), ..., f^(K)(0); derivs[0] must be 1.
  static AngularFunction custom(std::string name, std::function<double(double)> eval,
                                std::vector<double> derivs);

  /// Parses "vmf", "watson", "cauchy", "power" (with b) or "power_<b>".
  static AngularFunction parse(const std::string& name, int b = 0);

  Kind kind() const { return kind_; }
  int b() const { return b_; }
  const std::string& name() const { return name_; }

  double operator()(double s) const;

  /// f^(k)(0). Throws DomainError when k exceeds max_order().
  double deriv0(int k) const;
  int max_order() const;

  /// True when f(-s) = f(s).
  bool symmetric() const;

 private:
  AngularFunction(Kind kind, int b, std::string name) : kind_(kind), b_(b), name_(std::move(name)) {}

  Kind kind_;
  int b_ = 1;
  std::string name_;
  std::function<double(double)> custom_eval_;
  std::vector<double> custom_derivs_;
};

/// c_{p,kappa,f} = 1 / int_{-1}^1 (1 - s^2)^((p-3)/2) f(kappa s) ds.
double normalizing_constant(int p, double kappa, const AngularFunction& f);

/// E[(U'theta)^m] under the rotationally symmetric law, by quadrature.
double t_moment_oracle(int p, double kappa, const AngularFunction& f, int m);

/// E[g(U'theta)] under the rotationally symmetric law, by quadrature.
double projection_expectation(int p, double kappa, const AngularFunction& f,
                              const std::function<double(double)>& g);

/// n unit vectors in R^p, stored row-major.
class SphericalSample {
 public:
  SphericalSample(int p, std::vector<double> rows);

  int dim() const { return p_; }
  std::size_t size() const { return rows_.size() / static_cast<std::size_t>(p_); }
  std::span<const double> row(std::size_t i) const {
    return {rows_.data() + i * static_cast<std::size_t>(p_), static_cast<std::size_t>(p_)};
  }
  std::span<const double> data() const { return rows_; }

  /// CSV with header x1,...,xp and one observation per line.
  void write_csv(std::ostream& os) const;
  static SphericalSample read_csv(std::istream& is);

 private:
  int p_;
  std::vector<double> rows_;
};

inline constexpr double kUnitTolerance = 1e-10;

struct RotSymConfig {
  int p = 3;
  std::vector<double> theta;  // empty means the north pole e_p
  double kappa = 0.0;
  AngularFunction f = AngularFunction::vmf();
  std::uint64_t seed = 0;
};

/// Exact sampler by rejection from the null law of t = U'theta, followed by a
/// uniform tangent direction orthogonal to theta.
class RotSymSampler {
 public:
  explicit RotSymSampler(const RotSymConfig& config);

  int dim() const { return p_; }
  /// sup_{|s| <= 1} f(kappa s), inflated by 1 + 1e-12.
  double envelope() const { return envelope_; }
  /// Expected acceptance probability of the rejection step.
  double acceptance_rate() const { return acceptance_; }

  /// Draws one point into out[0..p).
  void draw(CounterRng& rng, std::span<double> out) const;
  /// Draws n points (row-major) from the stream `key`.
  void fill(StreamKey key, std::size_t n, std::span<double> out) const;

 private:
  double draw_projection(CounterRng& rng) const;
  void draw_impl(CounterRng& rng, std::normal_distribution<double>& normal,
                 std::span<double> out) const;

  int p_;
  double kappa_;
  AngularFunction f_;
  std::vector<double> householder_;  // empty when theta = e_p
  double envelope_ = 1.0;
  double acceptance_ = 1.0;
};

/// Stream of replicate `replicate` under base seed `seed` for the samplers.
inline StreamKey sample_stream(std::uint64_t seed, std::uint64_t replicate) {
  return stream_key(seed, {0x5A3Bull, replicate});
}

SphericalSample sample_uniform(int p, std::size_t n, std::uint64_t seed, std::uint64_t replicate = 0);
SphericalSample sample_rotsym(const RotSymConfig& config, std::size_t n, std::uint64_t replicate = 0);

}  // namespace sphtest
