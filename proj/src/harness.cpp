#include "sphtest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "format.hpp"
#include "sphtest/error.hpp"

namespace sphtest::harness {
namespace {

using detail::fmt;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("config key '" + key + "': cannot parse '" + s + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<T>(item, key));
  if (out.empty()) throw DataError("config key '" + key + "': empty list");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list<double>(text, "tau");
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw DataError("config key 'tau': expected start:step:stop");
  const double start = parse_number<double>(parts[0], "tau");
  const double step = parse_number<double>(parts[1], "tau");
  const double stop = parse_number<double>(parts[2], "tau");
  if (!(step > 0) || stop < start) throw DataError("config key 'tau': empty or invalid range");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quote in CSV line");
  out.push_back(cur);
  return out;
}

double kappa_of(std::size_t n, int ell, double tau) {
  return std::pow(static_cast<double>(n), -1.0 / ell) * tau;
}

struct Cell {
  std::size_t test = 0;
  std::size_t n = 0;
  int ell = 0;
  std::size_t tau_index = 0;
  double critical = 0;
  std::shared_ptr<const RotSymSampler> sampler;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (p < 2) throw DomainError("p must be >= 2");
  if (tests.empty()) throw DomainError("no tests configured");
  if (n_list.empty()) throw DomainError("no sample sizes configured");
  if (ells.empty()) throw DomainError("no rate exponents configured");
  if (taus.empty()) throw DomainError("no tau values configured");
  for (auto n : n_list) {
    if (n < 1) throw DomainError("sample sizes must be >= 1");
  }
  for (int ell : ells) {
    if (ell < 1) throw DomainError("rate exponents must be >= 1");
  }
  for (double tau : taus) {
    if (!(tau >= 0) || !std::isfinite(tau)) throw DomainError("tau must be finite and >= 0");
  }
  if (replicates < 1) throw DomainError("replicates must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (draws < 100'000) throw DomainError("draws must be >= 100000");
}

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig c;
  std::map<std::string, std::string> kv;
  std::string line;
  bool in_section = false, seen_section = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw DataError("line " + std::to_string(lineno) + ": malformed section");
      in_section = trim(line.substr(1, line.size() - 2)) == "experiment";
      seen_section = seen_section || in_section;
      continue;
    }
    if (!in_section) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (kv.count(key)) throw DataError("duplicate config key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  if (!seen_section) throw DataError("config has no [experiment] section");

  int b = 0;
  std::string f_name = "vmf";
  for (const auto& [key, value] : kv) {
    if (key == "p") {
      c.p = parse_number<int>(value, key);
    } else if (key == "f") {
      f_name = value;
    } else if (key == "b") {
      b = parse_number<int>(value, key);
    } else if (key == "tests") {
      c.tests.clear();
      for (const auto& t : split(value, ';')) {
        if (t.empty()) throw DataError("config key 'tests': empty entry");
        try {
          c.tests.push_back(WeightSequence::parse(t));
        } catch (const DomainError& e) {
          throw DataError(std::string("config key 'tests': ") + e.what());
        }
      }
    } else if (key == "n") {
      c.n_list = parse_list<std::size_t>(value, key);
    } else if (key == "ell") {
      c.ells = parse_list<int>(value, key);
    } else if (key == "tau") {
      c.taus = parse_grid(value);
    } else if (key == "replicates") {
      c.replicates = parse_number<std::size_t>(value, key);
    } else if (key == "alpha") {
      c.alpha = parse_number<double>(value, key);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "threads") {
      c.threads = parse_number<unsigned>(value, key);
    } else if (key == "draws") {
      c.draws = parse_number<std::size_t>(value, key);
    } else {
      throw DataError("unknown config key '" + key + "'");
    }
  }
  try {
    c.f = AngularFunction::parse(f_name, b);
    c.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse(in);
}

void PowerTable::write_csv(std::ostream& os) const {
  os << "test,n,ell,tau,reject_freq,mc_se,asym_power,trivial\n";
  for (const auto& r : rows) {
    os << csv_field(r.test) << ',' << r.n << ',' << r.ell << ',' << fmt(r.tau) << ',' << fmt(r.reject_freq)
       << ',' << fmt(r.mc_se) << ',' << fmt(r.asym_power) << ',' << (r.trivial ? 1 : 0) << '\n';
  }
}

PowerTable PowerTable::read_csv(std::istream& is) {
  PowerTable t;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty power table");
  if (trim(line) != "test,n,ell,tau,reject_freq,mc_se,asym_power,trivial") {
    throw DataError("unexpected power table header");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 8) throw DataError("line " + std::to_string(lineno) + ": expected 8 fields");
    PowerRow r;
    r.test = f[0];
    r.n = parse_number<std::size_t>(f[1], "n");
    r.ell = parse_number<int>(f[2], "ell");
    r.tau = parse_number<double>(f[3], "tau");
    r.reject_freq = parse_number<double>(f[4], "reject_freq");
    r.mc_se = parse_number<double>(f[5], "mc_se");
    r.asym_power = parse_number<double>(f[6], "asym_power");
    const int trivial = parse_number<int>(f[7], "trivial");
    if (trivial != 0 && trivial != 1) throw DataError("line " + std::to_string(lineno) + ": trivial must be 0 or 1");
    r.trivial = trivial == 1;
    if (!(r.reject_freq >= 0 && r.reject_freq <= 1)) {
      throw DataError("line " + std::to_string(lineno) + ": reject_freq outside [0, 1]");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

StreamKey replicate_key(std::uint64_t seed, std::size_t test_index, std::size_t n, int ell,
                        std::size_t tau_index, std::size_t replicate) {
  return stream_key(seed, {test_index, n, static_cast<std::uint64_t>(ell), tau_index, replicate});
}

asymptotics::PowerValue cell_asymptotic_power(const WeightSequence& weights, int p, const AngularFunction& f,
                                              int ell, double tau, double alpha,
                                              const asymptotics::LawOptions& opts) {
  const int q = std::max(weights.k_v(p), asymptotics::default_order(f));
  const auto report = asymptotics::classify_threshold(weights, f, q, p);
  if (report.rate_ell() && *report.rate_ell() == ell) {
    return asymptotics::asymptotic_power(weights, p, f, tau, alpha, opts);
  }
  asymptotics::PowerValue v;
  v.trivial = true;
  if (report.rate_ell() && ell > *report.rate_ell()) {
    v.power = 1.0;
    v.note = "kappa_n decays slower than the detection threshold";
  } else {
    v.power = alpha;
    v.note = report.k_star ? "kappa_n decays faster than the detection threshold" : "blind";
  }
  return v;
}

PowerTable run_power_experiment(const ExperimentConfig& config) {
  config.validate();
  const int p = config.p;
  const asymptotics::LawOptions law_opts{config.draws, kDefaultLawSeed};

  std::vector<SobolevStatistic> stats;
  std::vector<double> critical;
  for (const auto& w : config.tests) {
    stats.emplace_back(p, w);
    critical.push_back(asymptotics::null_law(w, p, law_opts).quantile(config.alpha).value);
  }

  // One sampler per (n, ell, tau); shared by the tests.
  std::map<std::tuple<std::size_t, int, std::size_t>, std::shared_ptr<const RotSymSampler>> samplers;
  std::vector<Cell> cells;
  for (std::size_t ti = 0; ti < config.tests.size(); ++ti) {
    for (auto n : config.n_list) {
      for (int ell : config.ells) {
        for (std::size_t k = 0; k < config.taus.size(); ++k) {
          auto& s = samplers[{n, ell, k}];
          if (!s) {
            RotSymConfig rc;
            rc.p = p;
            rc.kappa = kappa_of(n, ell, config.taus[k]);
            rc.f = config.f;
            s = std::make_shared<const RotSymSampler>(rc);
          }
          cells.push_back({ti, n, ell, k, critical[ti], s});
        }
      }
    }
  }

  const std::size_t m = config.replicates;
  constexpr std::size_t kChunk = 16;
  const std::size_t chunks_per_cell = (m + kChunk - 1) / kChunk;
  const std::size_t total_tasks = cells.size() * chunks_per_cell;
  std::vector<std::vector<unsigned char>> rejected(cells.size(), std::vector<unsigned char>(m, 0));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    std::vector<double> buffer;
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total_tasks) return;
      const auto& cell = cells[task / chunks_per_cell];
      const std::size_t begin = (task % chunks_per_cell) * kChunk;
      const std::size_t end = std::min(m, begin + kChunk);
      try {
        buffer.resize(cell.n * static_cast<std::size_t>(p));
        for (std::size_t r = begin; r < end; ++r) {
          cell.sampler->fill(replicate_key(config.seed, cell.test, cell.n, cell.ell, cell.tau_index, r), cell.n,
                             buffer);
          rejected[task / chunks_per_cell][r] = rejects(stats[cell.test](buffer), cell.critical) ? 1 : 0;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(total_tasks);
        return;
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, total_tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  std::map<std::tuple<std::size_t, int, std::size_t>, asymptotics::PowerValue> asym;
  PowerTable table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    std::size_t count = 0;
    for (auto bit : rejected[c]) count += bit;
    const double r = static_cast<double>(count) / static_cast<double>(m);
    auto it = asym.find({cell.test, cell.ell, cell.tau_index});
    if (it == asym.end()) {
      it = asym.emplace(std::tuple{cell.test, cell.ell, cell.tau_index},
                        cell_asymptotic_power(config.tests[cell.test], p, config.f, cell.ell,
                                              config.taus[cell.tau_index], config.alpha, law_opts))
               .first;
    }
    PowerRow row;
    row.test = config.tests[cell.test].name();
    row.n = cell.n;
    row.ell = cell.ell;
    row.tau = config.taus[cell.tau_index];
    row.reject_freq = r;
    row.mc_se = std::sqrt(r * (1.0 - r) / static_cast<double>(m));
    row.asym_power = it->second.power;
    row.trivial = it->second.trivial;
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

const char* series_color(std::size_t i) {
  static const char* kColors[] = {"#1a9641", "#2b5fb4", "#d95f02", "#7b3294", "#a6611a", "#4d4d4d"};
  return kColors[i % (sizeof kColors / sizeof kColors[0])];
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string emit_svg(const PowerTable& table, double alpha) {
  if (table.rows.empty()) throw DataError("cannot plot an empty power table");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");

  std::vector<int> ells;
  std::vector<std::string> tests;
  std::vector<std::size_t> ns;
  double tau_max = 0;
  for (const auto& r : table.rows) {
    if (std::find(ells.begin(), ells.end(), r.ell) == ells.end()) ells.push_back(r.ell);
    if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) tests.push_back(r.test);
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    tau_max = std::max(tau_max, r.tau);
  }
  std::sort(ells.begin(), ells.end());
  std::sort(ns.begin(), ns.end());
  if (tau_max <= 0) tau_max = 1;

  const double pw = 320, ph = 260, ml = 50, mr = 15, mt = 35, mb = 45;
  const double width = std::max(pw * static_cast<double>(ells.size()), 440.0);
  const auto per_row = static_cast<std::size_t>(std::max(1.0, std::floor((width - 20) / 200)));
  const std::size_t entries = tests.size() * (ns.size() + 1);
  const double legend_h = 20.0 * static_cast<double>((entries + per_row - 1) / per_row) + 10;
  const double height = ph + legend_h;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";

  for (std::size_t e = 0; e < ells.size(); ++e) {
    const int ell = ells[e];
    const double x0 = pw * static_cast<double>(e) + ml, x1 = pw * static_cast<double>(e + 1) - mr;
    const double y0 = ph - mb, y1 = mt;
    auto X = [&](double tau) { return x0 + (x1 - x0) * tau / tau_max; };
    auto Y = [&](double r) { return y0 + (y1 - y0) * r; };

    svg << "<g class=\"panel\" data-ell=\"" << ell << "\">\n";
    svg << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"13\">ell = " << ell << "</text>\n";
    svg << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double r = i / 4.0;
      svg << "<text x=\"" << num(x0 - 5) << "\" y=\"" << num(Y(r) + 4) << "\" text-anchor=\"end\""
          << " font-family=\"sans-serif\" font-size=\"10\">" << num(r) << "</text>\n";
      const double tau = tau_max * r;
      svg << "<text x=\"" << num(X(tau)) << "\" y=\"" << num(y0 + 14) << "\" text-anchor=\"middle\""
          << " font-family=\"sans-serif\" font-size=\"10\">" << num(tau) << "</text>\n";
    }
    svg << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(y0 + 32) << "\" text-anchor=\"middle\""
        << " font-family=\"sans-serif\" font-size=\"11\">tau</text>\n";
    svg << "<line class=\"alpha\" x1=\"" << num(x0) << "\" y1=\"" << num(Y(alpha)) << "\" x2=\"" << num(x1)
        << "\" y2=\"" << num(Y(alpha)) << "\" stroke=\"gray\" stroke-width=\"0.8\"/>\n";

    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
      const char* color = series_color(ti);
      std::vector<const PowerRow*> asym;
      for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        std::vector<const PowerRow*> pts;
        for (const auto& r : table.rows) {
          if (r.ell == ell && r.test == tests[ti] && r.n == ns[ni]) pts.push_back(&r);
        }
        if (pts.empty()) continue;
        std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->tau < b->tau; });
        if (asym.empty()) asym = pts;
        const char* dash = ni == 0 ? "2,3" : "6,4";
        if (pts.size() > 1) {
          svg << "<polyline class=\"empirical\" fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"1.2\" stroke-dasharray=\"" << dash << "\" points=\"";
          for (auto* r : pts) svg << num(X(r->tau)) << ',' << num(Y(r->reject_freq)) << ' ';
          svg << "\"/>\n";
        }
        for (auto* r : pts) {
          svg << "<circle class=\"marker\" cx=\"" << num(X(r->tau)) << "\" cy=\"" << num(Y(r->reject_freq))
              << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
      }
      std::erase_if(asym, [](auto* r) { return r->trivial; });
      if (asym.size() > 1) {
        svg << "<polyline class=\"asymptotic\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\" points=\"";
        for (auto* r : asym) svg << num(X(r->tau)) << ',' << num(Y(r->asym_power)) << ' ';
        svg << "\"/>\n";
      }
    }
    svg << "</g>\n";
  }

  // Legend: one entry per (test, n) plus the asymptotic curve per test.
  double ly = ph + 10;
  double lx = 20;
  for (std::size_t ti = 0; ti < tests.size(); ++ti) {
    const char* color = series_color(ti);
    auto entry = [&](const std::string& label, const char* dash) {
      svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 30) << "\" y2=\""
          << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (dash) svg << " stroke-dasharray=\"" << dash << "\"";
      svg << "/>\n<text x=\"" << num(lx + 36) << "\" y=\"" << num(ly + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(label) << "</text>\n";
      lx += 200;
      if (lx + 200 > width) {
        lx = 20;
        ly += 20;
      }
    };
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
      entry(tests[ti] + ", n = " + std::to_string(ns[ni]), ni == 0 ? "2,3" : "6,4");
    }
    entry(tests[ti] + ", asymptotic", nullptr);
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace sphtest::harness
