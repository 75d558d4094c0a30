#include "condense/cli.hpp"

#include "condense/csv.hpp"
#include "condense/ensemble.hpp"
#include "condense/errors.hpp"
#include "condense/weights.hpp"
#include "condense/zrp.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace condense::cli {

namespace {

std::vector<std::int64_t> parse_int_list(const std::string& csv,
                                         const std::string& what) {
  std::vector<std::int64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(item, &pos);
      while (pos < item.size() &&
             std::isspace(static_cast<unsigned char>(item[pos])))
        ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse " + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + " list is empty");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Family specs contain commas, so lists of them are split on semicolons.
std::vector<std::string> parse_str_list(const std::string& csv,
                                        const std::string& what, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError(what + " list is empty");
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

ExactMode parse_mode(const std::string& mode) {
  if (mode == "log-domain") return ExactMode::LogDomain;
  if (mode == "exact-rational") return ExactMode::ExactRational;
  throw ConfigError("mode must be log-domain or exact-rational, got '" + mode +
                    "'");
}

int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Auto cap: smallest head with certified reference tail <= target, clamped
// to the largest requested n. A user-provided cap above max(n) is refused
// (size guard) to keep single-n runs honest about their support.
std::int64_t resolve_cap(const WeightFamily& w, int m, std::int64_t cap_flag,
                         double tail_target, std::int64_t n_max) {
  if (cap_flag >= 0) {
    if (cap_flag > n_max) {
      throw SizeGuardError("cap " + std::to_string(cap_flag) +
                           " exceeds the largest n " + std::to_string(n_max));
    }
    return cap_flag;
  }
  return std::min(choose_cap(w, m - 1, tail_target), n_max);
}

struct CheckArgs {
  std::string family;
  int m = 2;
  std::int64_t nmax = 100000;
  std::string out = "check_report.txt";
};

int run_check(const CheckArgs& a) {
  WeightFamily w = WeightFamily::parse(a.family);
  HypothesisReport rep = w.check_hypotheses(a.m, a.nmax);

  std::ostringstream os;
  os << "family: " << w.spec_string() << '\n';
  os << "gamma: " << csv_double(w.gamma()) << '\n';
  os << "m: " << rep.m << '\n';
  os << "n_max: " << rep.n_max << '\n';
  os << "n_scanned: " << rep.n_scanned << '\n';
  os << "growth_constant: " << csv_double(rep.growth_constant) << '\n';
  os << "window_ratio: " << csv_double(rep.window_ratio) << '\n';
  os << "window_argmax: " << rep.window_argmax << '\n';
  os << "gamma_weight_nonincreasing: "
     << (rep.gamma_weight_nonincreasing ? "true" : "false") << '\n';
  os << "first_violation: "
     << (rep.first_violation ? std::to_string(*rep.first_violation) : "none")
     << '\n';
  os << "ratio_estimate: " << csv_double(rep.ratio_estimate) << '\n';
  os << "ratio_deviation: " << csv_double(rep.ratio_deviation) << '\n';
  os << "r_star: " << (rep.r_star ? csv_double(*rep.r_star) : "divergent")
     << '\n';
  write_file(a.out, os.str());

  std::cout << "check: wrote " << a.out << " (window_ratio="
            << csv_double(rep.window_ratio) << ", nonincreasing="
            << (rep.gamma_weight_nonincreasing ? "yes" : "no") << ")\n";
  return 0;
}

struct ExactArgs {
  std::string family;
  int m = 2;
  std::string n_csv;
  std::int64_t cap = -1;
  double phi = std::nan("");
  double tail_target = 1e-6;
  std::string mode = "log-domain";
  int threads = default_threads();
  std::string out = "exact.csv";
};

int run_exact(const ExactArgs& a) {
  WeightFamily w = WeightFamily::parse(a.family);
  if (a.m < 2) throw ConfigError("exact needs m >= 2");
  std::vector<std::int64_t> n_list = parse_int_list(a.n_csv, "n");
  std::int64_t cap = resolve_cap(w, a.m, a.cap, a.tail_target, n_list.back());
  std::optional<double> phi;
  if (!std::isnan(a.phi)) phi = a.phi;

  auto rows = convergence_sweep(w, a.m, n_list, cap, phi, a.threads,
                                parse_mode(a.mode));
  write_file(a.out, sweep_csv(rows));

  std::cout << "exact: wrote " << a.out << " (" << rows.size()
            << " rows, cap=" << cap
            << ", tv[last]=" << csv_double(rows.back().tv) << ")\n";
  return 0;
}

struct SimArgs {
  std::string family;
  int m = 3;
  std::int64_t n = 30;
  std::string kernel = "ring";
  std::uint64_t seed = 1;
  double t_total = 0.0;
  double t_burn = std::nan("");
  int replicas = 1;
  int batches = 32;
  std::int64_t stride = 1;
  std::string init = "packed";
  std::int64_t cap = -1;
  int threads = default_threads();
  std::string out = "sim";
};

int run_simulate(const SimArgs& a) {
  WeightFamily w = WeightFamily::parse(a.family);
  if (a.m < 2) throw ConfigError("simulate needs m >= 2");
  if (!(a.t_total > 0.0)) throw ConfigError("simulate needs --t-total > 0");

  JumpKernel kernel = [&]() {
    if (a.kernel == "ring") return JumpKernel::ring(a.m);
    if (a.kernel == "complete") return JumpKernel::complete_graph(a.m);
    throw ConfigError("kernel must be ring or complete, got '" + a.kernel +
                      "'");
  }();
  bool uniform = [&]() {
    if (a.init == "packed") return false;
    if (a.init == "uniform") return true;
    throw ConfigError("init must be packed or uniform, got '" + a.init + "'");
  }();

  std::int64_t cap = a.cap;
  if (cap < 0) {
    cap = a.n;  // cover the whole reachable background
  } else if (cap > a.n) {
    throw SizeGuardError("cap " + std::to_string(cap) + " exceeds n " +
                         std::to_string(a.n));
  }
  double t_burn = std::isnan(a.t_burn) ? 0.1 * a.t_total : a.t_burn;

  StationaryOptions opts;
  opts.batches = a.batches;
  opts.replicas = a.replicas;
  opts.threads = a.threads;
  opts.cap = cap;
  opts.uniform_init = uniform;
  StationaryEstimate est =
      estimate_stationary(w, kernel, a.n, t_burn, a.t_total, a.seed, opts);

  Pmf<OrderedConfig> exact_nu = ordered_cut_canonical(w, a.m, a.n, cap);
  double tv = tv_distance(est.nu_hat, exact_nu);

  std::string csv =
      "n,tv,tv_tail_bound,background_density,background_err,"
      "max_site_fraction,tv_mc_err,background_mc_err,max_site_mc_err\n";
  csv += std::to_string(a.n);
  csv += ',';
  csv += csv_double(tv);
  csv += ',';
  csv += csv_double(est.nu_hat.meta.tail + exact_nu.meta.tail);
  csv += ',';
  csv += csv_double(est.background_density);
  csv += ',';
  // The empirical background average is not head-truncated.
  csv += csv_double(0.0);
  csv += ',';
  csv += csv_double(est.max_site_fraction);
  csv += ',';
  csv += csv_double(est.tv_se());
  csv += ',';
  csv += csv_double(est.background_se);
  csv += ',';
  csv += csv_double(est.max_site_se);
  csv += '\n';
  write_file(a.out + "_stationary.csv", csv);

  auto points =
      condensate_trajectory(w, kernel, a.n, a.t_total, a.seed, a.stride, uniform);
  write_file(a.out + "_trajectory.csv", trajectory_csv(points, a.m));

  std::cout << "simulate: wrote " << a.out << "_stationary.csv and " << a.out
            << "_trajectory.csv (events=" << est.events
            << ", tv=" << csv_double(tv)
            << ", tv_mc_err=" << csv_double(est.tv_se()) << ")\n";
  return 0;
}

struct SweepArgs {
  std::string families_csv;
  std::string m_csv = "2";
  std::string n_csv;
  std::int64_t cap = -1;
  double phi = std::nan("");
  double tail_target = 1e-6;
  std::string mode = "log-domain";
  int threads = default_threads();
  std::string out = "sweep.csv";
};

int run_sweep(const SweepArgs& a) {
  std::vector<std::string> families =
      parse_str_list(a.families_csv, "family", ';');
  std::vector<std::int64_t> m_list = parse_int_list(a.m_csv, "m");
  std::vector<std::int64_t> n_list = parse_int_list(a.n_csv, "n");
  ExactMode mode = parse_mode(a.mode);
  std::optional<double> phi;
  if (!std::isnan(a.phi)) phi = a.phi;

  std::string csv =
      "family,m,n,tv,tv_tail_bound,background_density,background_err,"
      "max_site_fraction\n";
  std::size_t combos = 0;
  for (const std::string& fam : families) {
    WeightFamily w = WeightFamily::parse(fam);
    for (std::int64_t m64 : m_list) {
      if (m64 < 2) throw ConfigError("sweep needs m >= 2");
      int m = static_cast<int>(m64);
      std::int64_t cap =
          resolve_cap(w, m, a.cap, a.tail_target, n_list.back());
      auto rows = convergence_sweep(w, m, n_list, cap, phi, a.threads, mode);
      // Family specs may contain commas; quote that field when they do.
      std::string fam_field =
          fam.find(',') == std::string::npos ? fam : '"' + fam + '"';
      for (const SweepRow& r : rows) {
        csv += fam_field;
        csv += ',';
        csv += std::to_string(m);
        csv += ',';
        csv += std::to_string(r.n);
        csv += ',';
        csv += csv_double(r.tv);
        csv += ',';
        csv += csv_double(r.tv_tail_bound);
        csv += ',';
        csv += csv_double(r.background_density);
        csv += ',';
        csv += csv_double(r.background_err);
        csv += ',';
        csv += csv_double(r.max_site_fraction);
        csv += '\n';
      }
      ++combos;
    }
  }
  write_file(a.out, csv);
  std::cout << "sweep: wrote " << a.out << " (" << combos << " family/m combos x "
            << n_list.size() << " values of n)\n";
  return 0;
}

// CLI11 only consults config files attached to the top-level app, never a
// subcommand, so flat key=value files are merged by hand instead: each key
// that is absent from the command line becomes an ordinary "--key value"
// token pair appended before parsing. Values may be quoted so that lists
// like n="6,12" survive ini-style editors; a single matching pair of quotes
// is stripped.
std::vector<std::string> merge_config_tokens(std::vector<std::string> tokens) {
  std::string path;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "--config") {
      if (i + 1 < tokens.size()) path = tokens[i + 1];
      break;
    }
    if (tokens[i].rfind("--config=", 0) == 0) {
      path = tokens[i].substr(9);
      break;
    }
  }
  if (path.empty()) return tokens;

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");

  auto trim = [](const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key == "config")
      throw ConfigError(path + ": config files cannot set --config");
    std::string flag = "--" + key;
    bool on_cli = false;
    for (const std::string& tok : tokens) {
      if (tok == flag || tok.rfind(flag + "=", 0) == 0) {
        on_cli = true;
        break;
      }
    }
    if (on_cli) continue;
    tokens.push_back(flag);
    tokens.push_back(value);
  }
  return tokens;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "Exact, simulated, and certified-numerical condensation experiments "
      "for fixed-site particle ensembles",
      "condense"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "condense 1.0.0");

  std::string config_path;

  CheckArgs check;
  CLI::App* c = app.add_subcommand(
      "check", "Scan structural hypotheses of a weight family");
  c->add_option("--config", config_path,
                "Flat key=value config; flags take precedence");
  c->add_option("--family", check.family, "Family spec, e.g. powerlaw:alpha=3")
      ->required();
  c->add_option("--m", check.m, "Number of sites the bounds refer to");
  c->add_option("--nmax", check.nmax, "Scan bound");
  c->add_option("--out", check.out, "Report path");

  ExactArgs exact;
  CLI::App* e = app.add_subcommand(
      "exact", "Exact convergence table for one family and site count");
  e->add_option("--config", config_path,
                "Flat key=value config; flags take precedence");
  e->add_option("--family", exact.family, "Family spec")->required();
  e->add_option("--m", exact.m, "Sites");
  e->add_option("--n", exact.n_csv, "Comma-separated particle numbers")
      ->required();
  e->add_option("--cap", exact.cap, "Background support cap (default: auto)");
  e->add_option("--phi", exact.phi, "Reference fugacity (default: gamma)");
  e->add_option("--tail-target", exact.tail_target,
                "Reference tail bound for the auto cap");
  e->add_option("--mode", exact.mode, "log-domain or exact-rational");
  e->add_option("--threads", exact.threads, "Worker threads");
  e->add_option("--out", exact.out, "CSV path");

  SimArgs sim;
  CLI::App* s = app.add_subcommand(
      "simulate", "Zero-range simulation against the exact background law");
  s->add_option("--config", config_path,
                "Flat key=value config; flags take precedence");
  s->add_option("--family", sim.family, "Family spec")->required();
  s->add_option("--m", sim.m, "Sites");
  s->add_option("--n", sim.n, "Particles");
  s->add_option("--kernel", sim.kernel, "ring or complete");
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_option("--t-total", sim.t_total, "Simulated time horizon")->required();
  s->add_option("--t-burn", sim.t_burn, "Burn-in (default: 0.1 * t_total)");
  s->add_option("--replicas", sim.replicas, "Independent replicas");
  s->add_option("--batches", sim.batches, "Batch-means windows per replica");
  s->add_option("--stride", sim.stride, "Trajectory thinning stride");
  s->add_option("--init", sim.init, "packed or uniform");
  s->add_option("--cap", sim.cap, "Background support cap (default: n)");
  s->add_option("--threads", sim.threads, "Worker threads");
  s->add_option("--out", sim.out, "Output prefix");

  SweepArgs sweep;
  CLI::App* sw = app.add_subcommand(
      "sweep", "Convergence tables across families and site counts");
  sw->add_option("--config", config_path,
                "Flat key=value config; flags take precedence");
  sw->add_option("--families", sweep.families_csv,
                 "Semicolon-separated family specs")
      ->required();
  sw->add_option("--m", sweep.m_csv, "Comma-separated site counts");
  sw->add_option("--n", sweep.n_csv, "Comma-separated particle numbers")
      ->required();
  sw->add_option("--cap", sweep.cap, "Background support cap (default: auto)");
  sw->add_option("--phi", sweep.phi, "Reference fugacity (default: gamma)");
  sw->add_option("--tail-target", sweep.tail_target,
                 "Reference tail bound for the auto cap");
  sw->add_option("--mode", sweep.mode, "log-domain or exact-rational");
  sw->add_option("--threads", sweep.threads, "Worker threads");
  sw->add_option("--out", sweep.out, "CSV path");

  std::vector<std::string> tokens(argv + 1, argv + argc);
  try {
    tokens = merge_config_tokens(tokens);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  std::reverse(tokens.begin(), tokens.end());  // App::parse wants them reversed

  try {
    app.parse(std::move(tokens));
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForVersion& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (c->parsed()) return run_check(check);
    if (e->parsed()) return run_exact(exact);
    if (s->parsed()) return run_simulate(sim);
    if (sw->parsed()) return run_sweep(sweep);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const DivergenceError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const SizeGuardError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const CertificationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::out_of_range& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}

}  // namespace condense::cli
