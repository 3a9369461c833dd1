#pragma once

// Monte Carlo power experiments: rejection frequencies of Sobolev tests under
// rotationally symmetric alternatives with kappa_n = n^{-1/ell} tau, next to
// the asymptotic power at the same (test, ell, tau).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sphtest/asymptotics.hpp"
#include "sphtest/rotsym.hpp"
#include "sphtest/sobolev.hpp"

namespace sphtest::harness {

struct ExperimentConfig {
  int p = 3;
  AngularFunction f = AngularFunction::vmf();
  std::vector<WeightSequence> tests;
  std::vector<std::size_t> n_list;
  std::vector<int> ells;
  std::vector<double> taus;
  std::size_t replicates = 2000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: one per hardware thread
  std::size_t draws = kDefaultDraws;

  /// Throws DomainError on invalid settings.
  void validate() const;

  /// Flat "key = value" text with an [experiment] section; '#' starts a comment.
  /// Keys: p, f, b, tests (';'-separated names or comma lists), n, ell,
  /// tau (comma list or start:step:stop), replicates, alpha, seed, threads, draws.
  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig from_file(const std::string& path);
};

struct PowerRow {
  std::string test;
  std::size_t n = 0;
  int ell = 0;
  double tau = 0;
  double reject_freq = 0;
  double mc_se = 0;
  double asym_power = 0;
  bool trivial = false;
};

struct PowerTable {
  std::vector<PowerRow> rows;

  /// Header test,n,ell,tau,reject_freq,mc_se,asym_power,trivial.
  void write_csv(std::ostream& os) const;
  static PowerTable read_csv(std::istream& is);
};

/// Stream key of one replicate of one cell.
StreamKey replicate_key(std::uint64_t seed, std::size_t test_index, std::size_t n, int ell,
                        std::size_t tau_index, std::size_t replicate);

/// Asymptotic power attached to a (test, ell, tau) cell: the limit-law power
/// when ell = 2k*; otherwise alpha (ell < 2k* or blind) or 1 (ell > 2k*), flagged trivial.
asymptotics::PowerValue cell_asymptotic_power(const WeightSequence& weights, int p, const AngularFunction& f,
                                              int ell, double tau, double alpha,
                                              const asymptotics::LawOptions& opts = {});

/// Runs every (test, n, ell, tau) cell. Deterministic given the config,
/// independent of the thread count.
PowerTable run_power_experiment(const ExperimentConfig& config);

/// One panel per ell (ascending), x = tau, y = rejection frequency; empirical
/// series dotted for the smallest n and dashed otherwise, asymptotic curves
/// solid and omitted for trivial series; horizontal reference at alpha.
std::string emit_svg(const PowerTable& table, double alpha = 0.05);

}  // namespace sphtest::harness
