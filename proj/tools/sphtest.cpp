// sphtest command-line front end. Links only the C interface.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sphtest/sphtest.h"

namespace {

struct CliError {
  int code;
  std::string message;
};

void check(int rc) {
  if (rc != SPHTEST_OK) throw CliError{rc, sphtest_last_error()};
}

std::string read_input(const std::string& path) {
  std::ostringstream os;
  if (path == "-") {
    os << std::cin.rdbuf();
    return os.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{SPHTEST_DATA_ERROR, "cannot open '" + path + "'"};
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw CliError{SPHTEST_DATA_ERROR, "cannot write '" + path + "'"};
}

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { sphtest_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* h = nullptr;
  ~Handle() { Free(h); }
};

using Angular = Handle<sphtest_angular, sphtest_angular_free>;
using Weights = Handle<sphtest_weights, sphtest_weights_free>;
using Sample = Handle<sphtest_sample, sphtest_sample_free>;

double to_double(const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw CliError{SPHTEST_USAGE_ERROR, "cannot parse number '" + s + "'"};
  }
  return v;
}

// Comma list or start:step:stop.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 3) throw CliError{SPHTEST_USAGE_ERROR, "tau grid must be start:step:stop"};
    const double a = to_double(parts[0]), h = to_double(parts[1]), b = to_double(parts[2]);
    if (!(h > 0) || b < a) throw CliError{SPHTEST_USAGE_ERROR, "empty tau grid"};
    const auto count = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * h);
  } else {
    for (const auto& p : parts) out.push_back(to_double(p));
  }
  if (out.empty()) throw CliError{SPHTEST_USAGE_ERROR, "empty tau grid"};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev tests of uniformity on the hypersphere"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sphtest_version()));

  // test
  auto* test = app.add_subcommand("test", "Run a Sobolev test on a sample CSV");
  std::string test_input = "-", test_weights = "rayleigh";
  double test_alpha = 0.05;
  int test_p = 0;
  std::size_t test_draws = 0;
  std::uint64_t test_seed = 20200417;
  test->add_option("input", test_input, "Sample CSV ('-' for stdin)")->capture_default_str();
  test->add_option("--weights", test_weights, "Named test or comma list v_1,v_2,...")->capture_default_str();
  test->add_option("--alpha", test_alpha, "Significance level")->capture_default_str();
  test->add_option("--p", test_p, "Expected dimension (default: detected from the header)");
  test->add_option("--draws", test_draws, "Monte Carlo draws for mixture laws (0: default)");
  test->add_option("--law-seed", test_seed, "Seed of the mixture-law Monte Carlo sample")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a rotationally symmetric sample");
  int sim_p = 3, sim_b = 0;
  std::size_t sim_n = 100;
  double sim_kappa = 0;
  std::string sim_f = "vmf", sim_out = "-";
  std::uint64_t sim_seed = 1;
  sim->add_option("--p", sim_p, "Ambient dimension")->capture_default_str();
  sim->add_option("--n", sim_n, "Sample size")->capture_default_str();
  sim->add_option("--kappa", sim_kappa, "Concentration (0: uniform)")->capture_default_str();
  sim->add_option("--f", sim_f, "Angular function: vmf, watson, cauchy, power")->capture_default_str();
  sim->add_option("--b", sim_b, "Exponent for --f power");
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("-o,--output", sim_out, "Output CSV ('-' for stdout)")->capture_default_str();

  // power-curve
  auto* pc = app.add_subcommand("power-curve", "Run a Monte Carlo power experiment");
  std::string pc_config, pc_out = "-";
  unsigned pc_threads = 0;
  pc->add_option("config", pc_config, "Experiment config file")->required();
  pc->add_option("-o,--output", pc_out, "Output power table CSV ('-' for stdout)")->capture_default_str();
  pc->add_option("--threads", pc_threads, "Worker threads (overrides the config)");

  // asymptotic
  auto* asy = app.add_subcommand("asymptotic", "Asymptotic power curve");
  std::string asy_weights = "rayleigh", asy_f = "vmf", asy_tau = "0:0.5:6", asy_out = "-";
  int asy_p = 3, asy_b = 0, asy_ell = 0;
  double asy_alpha = 0.05;
  std::size_t asy_draws = 0;
  asy->add_option("--weights", asy_weights, "Named test or comma list")->capture_default_str();
  asy->add_option("--f", asy_f, "Angular function")->capture_default_str();
  asy->add_option("--b", asy_b, "Exponent for --f power");
  asy->add_option("--p", asy_p, "Ambient dimension")->capture_default_str();
  asy->add_option("--tau", asy_tau, "Grid: comma list or start:step:stop")->capture_default_str();
  asy->add_option("--ell", asy_ell, "Rate exponent (0: detection threshold)")->capture_default_str();
  asy->add_option("--alpha", asy_alpha, "Significance level")->capture_default_str();
  asy->add_option("--draws", asy_draws, "Monte Carlo draws for mixture laws (0: default)");
  asy->add_option("-o,--output", asy_out, "Output CSV ('-' for stdout)")->capture_default_str();

  // classify
  auto* cls = app.add_subcommand("classify", "Detection threshold of a test against f");
  std::string cls_weights = "rayleigh", cls_f = "vmf";
  int cls_p = 3, cls_b = 0, cls_order = 0;
  cls->add_option("--weights", cls_weights, "Named test or comma list")->capture_default_str();
  cls->add_option("--f", cls_f, "Angular function")->capture_default_str();
  cls->add_option("--b", cls_b, "Exponent for --f power");
  cls->add_option("--p", cls_p, "Ambient dimension")->capture_default_str();
  cls->add_option("--order", cls_order, "Classification order q (0: as far as f allows)");

  // plot
  auto* plot = app.add_subcommand("plot", "Power table CSV to SVG");
  std::string plot_in = "-", plot_out = "-";
  double plot_alpha = 0.05;
  plot->add_option("input", plot_in, "Power table CSV ('-' for stdin)")->capture_default_str();
  plot->add_option("-o,--output", plot_out, "Output SVG ('-' for stdout)")->capture_default_str();
  plot->add_option("--alpha", plot_alpha, "Level drawn as the reference line")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : SPHTEST_USAGE_ERROR;
  }

  try {
    if (*test) {
      Sample s;
      Weights w;
      OwnedString rec;
      check(sphtest_sample_from_csv(read_input(test_input).c_str(), &s.h));
      if (test_p != 0 && test_p != sphtest_sample_dim(s.h)) {
        throw CliError{SPHTEST_USAGE_ERROR, "--p " + std::to_string(test_p) + " does not match sample dimension " +
                                                std::to_string(sphtest_sample_dim(s.h))};
      }
      check(sphtest_weights_parse(test_weights.c_str(), &w.h));
      check(sphtest_run_test(s.h, w.h, test_alpha, test_draws, test_seed, &rec.s));
      std::cout << rec.str();
    } else if (*sim) {
      Angular f;
      Sample s;
      OwnedString csv;
      check(sphtest_angular_create(sim_f.c_str(), sim_b, &f.h));
      check(sphtest_sample_simulate(sim_p, sim_n, sim_kappa, f.h, sim_seed, &s.h));
      check(sphtest_sample_to_csv(s.h, &csv.s));
      write_output(sim_out, csv.str());
    } else if (*pc) {
      OwnedString csv;
      check(sphtest_power_experiment(read_input(pc_config).c_str(), pc_threads, &csv.s));
      write_output(pc_out, csv.str());
    } else if (*asy) {
      Angular f;
      Weights w;
      OwnedString csv;
      const auto taus = parse_grid(asy_tau);
      check(sphtest_angular_create(asy_f.c_str(), asy_b, &f.h));
      check(sphtest_weights_parse(asy_weights.c_str(), &w.h));
      check(sphtest_asymptotic_curve(w.h, f.h, asy_p, asy_ell, taus.data(), taus.size(), asy_alpha, asy_draws,
                                     &csv.s));
      write_output(asy_out, csv.str());
    } else if (*cls) {
      Angular f;
      Weights w;
      OwnedString rec;
      check(sphtest_angular_create(cls_f.c_str(), cls_b, &f.h));
      check(sphtest_weights_parse(cls_weights.c_str(), &w.h));
      check(sphtest_classify(w.h, f.h, cls_p, cls_order, &rec.s));
      std::cout << rec.str();
    } else if (*plot) {
      OwnedString svg;
      check(sphtest_plot_svg(read_input(plot_in).c_str(), plot_alpha, &svg.s));
      write_output(plot_out, svg.str());
    }
  } catch (const CliError& e) {
    std::cerr << "sphtest: " << e.message << '\n';
    return e.code;
  }
  return 0;
}
