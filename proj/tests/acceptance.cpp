// Acceptance gate for the condense library and CLI. Each criterion prints
// exactly one [PASS]/[FAIL] verdict line; failures add indented diagnostics.
// Tolerances are pinned below and are part of the contract: a red criterion
// means the build is wrong, not that the threshold needs adjusting.

#include "condense/combinatorics.hpp"
#include "condense/ensemble.hpp"
#include "condense/rational.hpp"
#include "condense/weights.hpp"
#include "condense/zrp.hpp"

#include "oracles.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace condense;

constexpr double kRelMatch = 1e-12;         // criteria 2 and 8
constexpr double kMonotoneSlack = 0.05;     // criterion 3: one <=5% uptick
constexpr double kContraction = 0.25;       // criterion 3: tv(1600)/tv(50)
constexpr double kRhoWindow = 0.05;         // criterion 4: 5% of rho_c
constexpr double kOracleErrCeiling = 1e-9;  // criterion 4 oracle remainder
constexpr double kTvCeiling = 0.02;         // criterion 5
constexpr double kTvSigmaFactor = 3.0;      // criterion 5
constexpr double kKernelSigmaFactor = 2.0;  // criterion 6
constexpr double kGrowthWindow = 0.01;      // criterion 7: 1% of m^alpha
constexpr std::uint64_t kMinEvents = 10'000'000;  // criterion 5
constexpr std::uint64_t kSimSeed = 6021023;       // criteria 5 and 6

struct Criterion {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (notes.size() < 8) notes.push_back(what);
  }
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_command(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

// 1. The closed-form count of configurations mapping onto a cut image agrees
// with exhaustive enumeration, the m-fold bound holds, and the bound is an
// equality exactly when the removed maximum strictly dominates the rest.
void criterion_1(Criterion& c) {
  auto start = std::chrono::steady_clock::now();
  for (int m = 2; m <= 4; ++m) {
    for (std::int64_t n = 0; n <= 12; ++n) {
      std::map<OrderedConfig, std::int64_t> brute;
      for (const Config& xi : enumerate_sigma(m, n)) ++brute[cut(order(xi))];

      for (const OrderedConfig& eta : enumerate_ordered(m - 1, n)) {
        BigInt lib = count_cut_orderings(eta, n, m);
        auto it = brute.find(eta);
        BigInt expected = it == brute.end() ? 0 : it->second;
        c.require(lib == expected,
                  "count mismatch at m=" + std::to_string(m) +
                      " n=" + std::to_string(n));

        BigInt bound = BigInt(m) * count_orderings(eta);
        bool strict = n - eta.total() > eta.last();
        c.require(lib <= bound, "bound violated at m=" + std::to_string(m) +
                                    " n=" + std::to_string(n));
        c.require((lib == bound) == strict,
                  "bound sharpness wrong at m=" + std::to_string(m) +
                      " n=" + std::to_string(n));
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  c.require(secs < 10.0, "runtime " + fmt(secs) + " s exceeds 10 s");
}

// 2. Log-domain pushforwards match brute-force enumeration of the underlying
// product and conditioned measures.
void criterion_2(Criterion& c) {
  auto start = std::chrono::steady_clock::now();
  std::vector<WeightFamily> families{WeightFamily::power_law(3.0),
                                     WeightFamily::geometric_polynomial(2.0,
                                                                        3.0)};
  for (const WeightFamily& w : families) {
    for (int m = 2; m <= 4; ++m) {
      for (std::int64_t n = 0; n <= 12; ++n) {
        auto lib = ordered_cut_canonical(w, m, n, 12);
        auto brute = oracles::brute_cut_pushforward(w, m, n);
        std::size_t covered = 0;
        for (std::size_t i = 0; i < lib.support.size(); ++i) {
          auto it = brute.find(lib.support[i]);
          double q = it == brute.end() ? 0.0 : it->second;
          if (it != brute.end()) ++covered;
          c.require(oracles::rel_diff(lib.prob[i], q) < kRelMatch,
                    "canonical mismatch at m=" + std::to_string(m) +
                        " n=" + std::to_string(n) + ": " + fmt(lib.prob[i]) +
                        " vs " + fmt(q));
        }
        c.require(covered == brute.size(),
                  "canonical support not covered at m=" + std::to_string(m) +
                      " n=" + std::to_string(n));
      }

      if (m > 3) continue;
      for (double scale : {0.3, 1.0}) {
        double phi = scale * w.gamma();
        auto lib = ordered_gc_pmf(w, m, phi, 12);
        auto brute = oracles::brute_gc_pushforward(w, m, phi, 12);
        c.require(lib.support.size() == brute.size(),
                  "grand-canonical support size mismatch at m=" +
                      std::to_string(m));
        for (std::size_t i = 0; i < lib.support.size(); ++i) {
          auto it = brute.find(lib.support[i]);
          c.require(it != brute.end() &&
                        oracles::rel_diff(lib.prob[i], it->second) < kRelMatch,
                    "grand-canonical mismatch at m=" + std::to_string(m) +
                        " phi=" + fmt(phi));
        }
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  c.require(secs < 30.0, "runtime " + fmt(secs) + " s exceeds 30 s");
}

// 3. Distance to the critical reference shrinks as n grows: nonincreasing up
// to one small wobble, and a fourfold drop across the sweep.
void criterion_3(Criterion& c) {
  auto start = std::chrono::steady_clock::now();
  WeightFamily pl3 = WeightFamily::power_law(3.0);
  std::vector<std::int64_t> ns{50, 100, 200, 400, 800, 1600};
  for (int m = 2; m <= 3; ++m) {
    std::int64_t cap = choose_cap(pl3, m - 1, 1e-6);
    auto rows = convergence_sweep(pl3, m, ns, cap);
    int upticks = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].tv < rows[i - 1].tv) continue;
      ++upticks;
      c.require(rows[i].tv - rows[i - 1].tv <= kMonotoneSlack * rows[i - 1].tv,
                "tv uptick beyond 5% at m=" + std::to_string(m) +
                    " n=" + std::to_string(rows[i].n));
    }
    c.require(upticks <= 1, "more than one tv uptick at m=" +
                                std::to_string(m));
    c.require(rows.back().tv < kContraction * rows.front().tv,
              "tv(1600)=" + fmt(rows.back().tv) + " not below 0.25*tv(50)=" +
                  fmt(kContraction * rows.front().tv) +
                  " at m=" + std::to_string(m));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  c.require(secs < 300.0, "runtime " + fmt(secs) + " s exceeds 5 min");
}

// 4. The background density at large n sits within 5% of the critical
// density, recomputed here by an independent truncated-series oracle.
void criterion_4(Criterion& c) {
  double oracle_err = 0.0;
  double rho_c = oracles::power_law_rho_c(3.0, &oracle_err);
  c.require(oracle_err < kOracleErrCeiling,
            "oracle remainder " + fmt(oracle_err) + " not below 1e-9");

  WeightFamily pl3 = WeightFamily::power_law(3.0);
  std::int64_t cap = choose_cap(pl3, 2, 1e-6);
  std::vector<std::int64_t> ns{1600};
  auto rows = convergence_sweep(pl3, 3, ns, cap);
  double bg = rows.front().background_density;
  c.require(std::abs(bg - rho_c) <= kRhoWindow * rho_c,
            "background density " + fmt(bg) + " not within 5% of rho_c=" +
                fmt(rho_c));
}

// Shared by criteria 5 and 6: a time horizon calibrated by a short pilot so
// that the full runs generate at least 1e7 events with margin.
double simulation_horizon() {
  static const double horizon = [] {
    WeightFamily pl3 = WeightFamily::power_law(3.0);
    StationaryOptions opts;
    opts.cap = 30;
    StationaryEstimate pilot = estimate_stationary(
        pl3, JumpKernel::ring(3), 30, 200.0, 2000.0, kSimSeed, opts);
    double rate = static_cast<double>(pilot.events) / 2000.0;
    double total = 1.08 * static_cast<double>(kMinEvents);
    return std::ceil(total / (4.0 * rate));  // four replicas
  }();
  return horizon;
}

StationaryEstimate run_kernel(const JumpKernel& kernel) {
  WeightFamily pl3 = WeightFamily::power_law(3.0);
  double t_total = simulation_horizon();
  StationaryOptions opts;
  opts.cap = 30;
  opts.replicas = 4;
  opts.batches = 32;
  return estimate_stationary(pl3, kernel, 30, 0.1 * t_total, t_total, kSimSeed,
                             opts);
}

// 5. The simulated background law agrees with the exact one within both an
// absolute ceiling and its own error bars, and the shipped binary reproduces
// its CSVs bit for bit under a fixed seed.
void criterion_5(Criterion& c) {
  auto start = std::chrono::steady_clock::now();
  WeightFamily pl3 = WeightFamily::power_law(3.0);

  StationaryEstimate est = run_kernel(JumpKernel::ring(3));
  c.require(est.events >= kMinEvents,
            "only " + std::to_string(est.events) + " events, need 1e7");

  auto exact_nu = ordered_cut_canonical(pl3, 3, 30, 30);
  double tv = tv_distance(est.nu_hat, exact_nu);
  c.require(tv < kTvCeiling, "tv=" + fmt(tv) + " not below 0.02");
  c.require(tv < kTvSigmaFactor * est.tv_se(),
            "tv=" + fmt(tv) + " not below 3*tv_se=" +
                fmt(kTvSigmaFactor * est.tv_se()));

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() /
                 ("condense_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::string t_str = fmt(simulation_horizon());
  std::string base = std::string("\"") + CONDENSE_CLI_PATH +
                     "\" simulate --family powerlaw:alpha=3 --m 3 --n 30 "
                     "--kernel ring --seed " +
                     std::to_string(kSimSeed) + " --replicas 4 --t-total " +
                     t_str + " --stride 100000 --out \"";
  for (const char* tag : {"a", "b"}) {
    fs::path log = dir / (std::string("run_") + tag + ".log");
    int rc = run_command(base + (dir / tag).string() + "\" > \"" +
                         log.string() + "\" 2>&1");
    c.require(rc == 0, std::string("cli run ") + tag + " exited with " +
                           std::to_string(rc));
  }
  std::string stat_a = slurp(dir / "a_stationary.csv");
  std::string stat_b = slurp(dir / "b_stationary.csv");
  std::string traj_a = slurp(dir / "a_trajectory.csv");
  std::string traj_b = slurp(dir / "b_trajectory.csv");
  c.require(!stat_a.empty() && !traj_a.empty(), "cli outputs missing");
  c.require(stat_a == stat_b, "stationary CSVs differ between identical runs");
  c.require(traj_a == traj_b, "trajectory CSVs differ between identical runs");
  fs::remove_all(dir);

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  c.require(secs < 120.0, "runtime " + fmt(secs) + " s exceeds 2 min");
}

// 6. The stationary law does not depend on the symmetric kernel: ring and
// complete-graph estimates agree within their combined Monte Carlo error.
void criterion_6(Criterion& c) {
  StationaryEstimate ring = run_kernel(JumpKernel::ring(3));
  StationaryEstimate complete = run_kernel(JumpKernel::complete_graph(3));
  double tv = tv_distance(ring.nu_hat, complete.nu_hat);
  double budget = kKernelSigmaFactor * (ring.tv_se() + complete.tv_se());
  c.require(tv < budget,
            "kernel tv=" + fmt(tv) + " not below 2*(se_r+se_c)=" + fmt(budget));
}

// 7. The structural scan recovers the window-ratio constant of the cubic
// power law and flags a deliberately non-monotone table.
void criterion_7(Criterion& c) {
  WeightFamily pl3 = WeightFamily::power_law(3.0);
  for (int m = 2; m <= 4; ++m) {
    HypothesisReport rep = pl3.check_hypotheses(m, 100000);
    double target = std::pow(static_cast<double>(m), 3.0);
    c.require(std::abs(rep.window_ratio - target) <= kGrowthWindow * target,
              "window ratio " + fmt(rep.window_ratio) + " not within 1% of " +
                  fmt(target) + " at m=" + std::to_string(m));
    c.require(rep.gamma_weight_nonincreasing,
              "power law flagged as non-monotone at m=" + std::to_string(m));
  }

  WeightFamily bumpy = WeightFamily::tabulated(
      {1.0, 0.5, 0.9, 0.4, 0.35, 0.3, 0.26, 0.22, 0.19, 0.16, 0.14, 0.12},
      1.0);
  HypothesisReport rep = bumpy.check_hypotheses(2, 100000);
  c.require(!rep.gamma_weight_nonincreasing,
            "non-monotone table not flagged");
  c.require(rep.first_violation.has_value() && *rep.first_violation == 2,
            "first violation misreported");
}

// 8. The log-domain and exact big-rational pipelines agree on every single
// probability of both the canonical law and its cut pushforward.
void criterion_8(Criterion& c) {
  std::vector<WeightFamily> families{WeightFamily::power_law(3.0),
                                     WeightFamily::geometric_polynomial(2.0,
                                                                        3.0)};
  for (const WeightFamily& w : families) {
    for (int m = 2; m <= 3; ++m) {
      for (std::int64_t n = 0; n <= 12; ++n) {
        auto log_nu = canonical_pmf(w, m, n);
        auto rat_nu = exact::canonical_pmf(w, m, n);
        c.require(log_nu.support.size() == rat_nu.size(),
                  "canonical support size mismatch at m=" + std::to_string(m) +
                      " n=" + std::to_string(n));
        std::map<Config, exact::Rational> rat;
        for (const auto& [xi, p] : rat_nu) rat.emplace(xi, p);
        for (std::size_t i = 0; i < log_nu.support.size(); ++i) {
          auto it = rat.find(log_nu.support[i]);
          c.require(it != rat.end() &&
                        oracles::rel_diff(log_nu.prob[i],
                                          exact::to_double(it->second)) <
                            kRelMatch,
                    "canonical probability mismatch at m=" +
                        std::to_string(m) + " n=" + std::to_string(n));
        }

        auto log_cut = ordered_cut_canonical(w, m, n, n);
        auto rat_cut = exact::ordered_cut_canonical(w, m, n, n);
        c.require(log_cut.support.size() == rat_cut.size(),
                  "cut support size mismatch at m=" + std::to_string(m) +
                      " n=" + std::to_string(n));
        std::map<OrderedConfig, exact::Rational> cut_map;
        for (const auto& [eta, p] : rat_cut) cut_map.emplace(eta, p);
        for (std::size_t i = 0; i < log_cut.support.size(); ++i) {
          auto it = cut_map.find(log_cut.support[i]);
          double q = it == cut_map.end() ? -1.0
                                         : exact::to_double(it->second);
          c.require(it != cut_map.end() &&
                        oracles::rel_diff(log_cut.prob[i], q) < kRelMatch,
                    "cut probability mismatch at m=" + std::to_string(m) +
                        " n=" + std::to_string(n));
        }
      }
    }
  }
}

struct Entry {
  const char* label;
  void (*fn)(Criterion&);
};

}  // namespace

int main() {
  const Entry plan[] = {
      {"1. cut-ordering counts match brute force; m-fold bound sharp exactly "
       "off the boundary",
       criterion_1},
      {"2. ordered pushforwards match brute-force enumeration to 1e-12",
       criterion_2},
      {"3. distance to the critical reference decreases and contracts 4x "
       "over n=50..1600",
       criterion_3},
      {"4. background density at n=1600 within 5% of the critical density "
       "oracle",
       criterion_4},
      {"5. simulation matches the exact law at 1e7 events; reruns bit-exact",
       criterion_5},
      {"6. ring and complete-graph kernels agree within Monte Carlo error",
       criterion_6},
      {"7. window-ratio constant within 1% of m^3; non-monotone table "
       "flagged",
       criterion_7},
      {"8. log-domain and exact-rational probabilities agree to 1e-12",
       criterion_8},
  };

  bool all_ok = true;
  for (const Entry& entry : plan) {
    Criterion c;
    auto start = std::chrono::steady_clock::now();
    try {
      entry.fn(c);
    } catch (const std::exception& err) {
      c.ok = false;
      c.notes.push_back(std::string("exception: ") + err.what());
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::ostringstream line;
    line << (c.ok ? "[PASS] " : "[FAIL] ") << entry.label << " (";
    line.precision(1);
    line << std::fixed << secs << " s)";
    std::cout << line.str() << '\n';
    for (const std::string& note : c.notes) std::cout << "       " << note
                                                      << '\n';
    all_ok = all_ok && c.ok;
  }
  return all_ok ? 0 : 1;
}
