#include "sphtest/sphtest.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "format.hpp"
#include "sphtest/asymptotics.hpp"
#include "sphtest/error.hpp"
#include "sphtest/harness.hpp"
#include "sphtest/rotsym.hpp"
#include "sphtest/sobolev.hpp"

struct sphtest_angular {
  sphtest::AngularFunction f;
};

struct sphtest_weights {
  sphtest::WeightSequence w;
};

struct sphtest_sample {
  sphtest::SphericalSample s;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& msg) {
  last_error = msg;
  return code;
}

template <typename F>
int guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return SPHTEST_OK;
  } catch (const sphtest::Error& e) {
    return fail(static_cast<int>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SPHTEST_NUMERICAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SPHTEST_NUMERICAL_ERROR, e.what());
  } catch (...) {
    return fail(SPHTEST_NUMERICAL_ERROR, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw sphtest::DomainError(what);
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sphtest_version(void) { return "0.1.0"; }

const char* sphtest_last_error(void) { return last_error.c_str(); }

void sphtest_string_free(char* s) { delete[] s; }

int sphtest_angular_create(const char* name, int b, sphtest_angular** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = new sphtest_angular{sphtest::AngularFunction::parse(name, b)};
  });
}

void sphtest_angular_free(sphtest_angular* f) { delete f; }

int sphtest_weights_parse(const char* spec, sphtest_weights** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    *out = new sphtest_weights{sphtest::WeightSequence::parse(spec)};
  });
}

void sphtest_weights_free(sphtest_weights* w) { delete w; }

int sphtest_sample_from_csv(const char* text, sphtest_sample** out) {
  return guarded([&] {
    require(text && out, "null argument");
    std::istringstream in(text);
    *out = new sphtest_sample{sphtest::SphericalSample::read_csv(in)};
  });
}

int sphtest_sample_simulate(int p, size_t n, double kappa, const sphtest_angular* f, uint64_t seed,
                            sphtest_sample** out) {
  return guarded([&] {
    require(f && out, "null argument");
    sphtest::RotSymConfig c;
    c.p = p;
    c.kappa = kappa;
    c.f = f->f;
    c.seed = seed;
    *out = new sphtest_sample{sphtest::sample_rotsym(c, n)};
  });
}

int sphtest_sample_to_csv(const sphtest_sample* s, char** out) {
  return guarded([&] {
    require(s && out, "null argument");
    std::ostringstream os;
    s->s.write_csv(os);
    *out = dup(os.str());
  });
}

int sphtest_sample_dim(const sphtest_sample* s) { return s ? s->s.dim() : 0; }

size_t sphtest_sample_size(const sphtest_sample* s) { return s ? s->s.size() : 0; }

void sphtest_sample_free(sphtest_sample* s) { delete s; }

int sphtest_run_test(const sphtest_sample* s, const sphtest_weights* w, double alpha, size_t draws,
                     uint64_t law_seed, char** record) {
  return guarded([&] {
    require(s && w && record, "null argument");
    const sphtest::asymptotics::LawOptions opts{draws ? draws : sphtest::kDefaultDraws, law_seed};
    const auto law = sphtest::asymptotics::null_law(w->w, s->s.dim(), opts);
    *record = dup(sphtest::run_test(s->s, w->w, alpha, law).to_record());
  });
}

int sphtest_classify(const sphtest_weights* w, const sphtest_angular* f, int p, int q, char** record) {
  return guarded([&] {
    require(w && f && record, "null argument");
    const int order = q > 0 ? q : std::max(w->w.k_v(p), sphtest::asymptotics::default_order(f->f));
    *record = dup(sphtest::asymptotics::classify_threshold(w->w, f->f, order, p).to_record());
  });
}

int sphtest_asymptotic_curve(const sphtest_weights* w, const sphtest_angular* f, int p, int ell,
                             const double* taus, size_t ntau, double alpha, size_t draws, char** csv) {
  return guarded([&] {
    require(w && f && csv && (taus || ntau == 0), "null argument");
    require(ell >= 0, "ell must be >= 0");
    const sphtest::asymptotics::LawOptions opts{draws ? draws : sphtest::kDefaultDraws,
                                                sphtest::kDefaultLawSeed};
    std::ostringstream os;
    os << "tau,power,se,flag\n";
    for (size_t i = 0; i < ntau; ++i) {
      const auto v = ell == 0 ? sphtest::asymptotics::asymptotic_power(w->w, p, f->f, taus[i], alpha, opts)
                              : sphtest::harness::cell_asymptotic_power(w->w, p, f->f, ell, taus[i], alpha, opts);
      os << sphtest::detail::fmt(taus[i]) << ',' << sphtest::detail::fmt(v.power) << ','
         << sphtest::detail::fmt(v.se) << ',' << (v.trivial ? 1 : 0) << '\n';
    }
    *csv = dup(os.str());
  });
}

int sphtest_power_experiment(const char* config_text, unsigned threads, char** csv) {
  return guarded([&] {
    require(config_text && csv, "null argument");
    std::istringstream in(config_text);
    auto config = sphtest::harness::ExperimentConfig::parse(in);
    if (threads > 0) config.threads = threads;
    std::ostringstream os;
    sphtest::harness::run_power_experiment(config).write_csv(os);
    *csv = dup(os.str());
  });
}

int sphtest_plot_svg(const char* table_csv, double alpha, char** svg) {
  return guarded([&] {
    require(table_csv && svg, "null argument");
    std::istringstream in(table_csv);
    *svg = dup(sphtest::harness::emit_svg(sphtest::harness::PowerTable::read_csv(in), alpha));
  });
}

}  // extern "C"
