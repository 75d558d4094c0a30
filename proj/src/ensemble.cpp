#include "condense/ensemble.hpp"

#include "condense/csv.hpp"
#include "condense/numeric.hpp"
#include "condense/rational.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

namespace condense {

namespace {

// Z evaluations feeding normalized heads get a tolerance well under the
// 1e-10 head+tail validation budget.
constexpr double kZTol = 1e-13;

double log_count(const BigInt& k) {
  return std::log(k.convert_to<double>());
}

}  // namespace

ConvolutionTable::ConvolutionTable(const WeightFamily& w, int m,
                                   std::int64_t n)
    : m_(m), n_(n) {
  if (m < 1) throw std::invalid_argument("convolution table needs m >= 1");
  if (n < 0) throw std::invalid_argument("convolution table needs n >= 0");
  double cells = static_cast<double>(m) * (static_cast<double>(n) + 1.0);
  if (cells > 2e8) {
    throw SizeGuardError("convolution table of " + std::to_string(cells) +
                         " cells exceeds the guard");
  }
  std::vector<double> lf = w.log_f_prefix(n);
  rows_.reserve(static_cast<std::size_t>(m));
  rows_.push_back(lf);
  std::vector<double> scratch;
  for (int k = 2; k <= m; ++k) {
    const std::vector<double>& prev = rows_.back();
    std::vector<double> row(static_cast<std::size_t>(n) + 1);
    for (std::int64_t j = 0; j <= n; ++j) {
      scratch.clear();
      for (std::int64_t i = 0; i <= j; ++i) {
        scratch.push_back(prev[static_cast<std::size_t>(j - i)] +
                          lf[static_cast<std::size_t>(i)]);
      }
      row[static_cast<std::size_t>(j)] = log_sum_exp(scratch);
    }
    rows_.push_back(std::move(row));
  }
}

double ConvolutionTable::log_partition(int k, std::int64_t j) const {
  if (k < 1 || k > m_ || j < 0 || j > n_) {
    throw std::out_of_range("convolution table index (k=" + std::to_string(k) +
                            ", j=" + std::to_string(j) + ")");
  }
  return rows_[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j)];
}

Pmf<Config> canonical_pmf(const WeightFamily& w, int m, std::int64_t n) {
  ConvolutionTable table(w, m, n);
  std::vector<double> lf = w.log_f_prefix(n);
  const double log_norm = table.log_partition(m, n);

  Pmf<Config> pmf;
  pmf.meta.m = m;
  pmf.meta.n = n;
  pmf.meta.cap = n;
  SigmaEnumerator en(m, n);
  Config xi;
  while (en.next(xi)) {
    double lp = -log_norm;
    for (std::int64_t v : xi) lp += lf[static_cast<std::size_t>(v)];
    pmf.support.push_back(xi);
    pmf.prob.push_back(std::exp(lp));
  }
  pmf.validate();
  return pmf;
}

Pmf<OrderedConfig> ordered_cut_canonical(const WeightFamily& w, int m,
                                         std::int64_t n, std::int64_t cap) {
  if (m < 2) throw std::invalid_argument("cut measure needs m >= 2");
  if (n < 0 || cap < 0) throw std::invalid_argument("need n >= 0, cap >= 0");
  ConvolutionTable table(w, m, n);
  std::vector<double> lf = w.log_f_prefix(std::max(cap, n));
  const double log_norm = table.log_partition(m, n);

  Pmf<OrderedConfig> pmf;
  pmf.meta.m = m - 1;
  pmf.meta.n = n;
  pmf.meta.cap = cap;
  pmf.meta.cap_warning = 2 * cap >= n;

  CompensatedSum head;
  OrderedEnumerator en(m - 1, cap);
  OrderedConfig eta;
  while (en.next(eta)) {
    double p = 0.0;
    std::int64_t leftover = n - eta.total();
    if (leftover >= eta.last()) {
      BigInt k = count_cut_orderings(eta, n, m);
      double lp = log_count(k) - log_norm + lf[static_cast<std::size_t>(leftover)];
      for (std::int64_t v : eta.occupancies())
        lp += lf[static_cast<std::size_t>(v)];
      p = std::exp(lp);
    }
    pmf.support.push_back(eta);
    pmf.prob.push_back(p);
    head.add(p);
  }
  pmf.meta.tail = std::max(0.0, 1.0 - head.value());
  pmf.validate();
  return pmf;
}

Pmf<OrderedConfig> ordered_gc_pmf(const WeightFamily& w, int m, double phi,
                                  std::int64_t cap) {
  if (m < 1) throw std::invalid_argument("need m >= 1");
  if (cap < 0) throw std::invalid_argument("need cap >= 0");
  if (!(phi >= 0.0)) throw std::invalid_argument("need phi >= 0");

  Pmf<OrderedConfig> pmf;
  pmf.meta.m = m;
  pmf.meta.phi = phi;
  pmf.meta.cap = cap;

  if (phi == 0.0) {
    // Z(0) = f(0); all mass on the empty configuration.
    OrderedEnumerator en(m, cap);
    OrderedConfig zeta;
    while (en.next(zeta)) {
      pmf.support.push_back(zeta);
      pmf.prob.push_back(zeta.total() == 0 ? 1.0 : 0.0);
    }
    pmf.validate();
    return pmf;
  }

  const double log_z = std::log(w.partition_function(phi, kZTol));
  const double log_phi = std::log(phi);
  std::vector<double> lf = w.log_f_prefix(cap);

  CompensatedSum head;
  OrderedEnumerator en(m, cap);
  OrderedConfig zeta;
  while (en.next(zeta)) {
    double lp = log_count(count_orderings(zeta)) +
                static_cast<double>(zeta.total()) * log_phi -
                static_cast<double>(m) * log_z;
    for (std::int64_t v : zeta.occupancies())
      lp += lf[static_cast<std::size_t>(v)];
    double p = std::exp(lp);
    pmf.support.push_back(zeta);
    pmf.prob.push_back(p);
    head.add(p);
  }
  pmf.meta.tail = std::max(0.0, 1.0 - head.value());
  pmf.validate();
  return pmf;
}

double tail_mass_bound(const WeightFamily& w, int m, std::int64_t cap) {
  Pmf<OrderedConfig> head = ordered_gc_pmf(w, m, w.gamma(), cap);
  return head.meta.tail;
}

std::int64_t choose_cap(const WeightFamily& w, int m, double tail_target) {
  if (!(tail_target > 0.0) || !(tail_target < 1.0)) {
    throw std::invalid_argument("tail_target must be in (0, 1)");
  }
  const double gamma = w.gamma();
  const double log_z = std::log(w.partition_function(gamma, kZTol));
  const double log_gamma = std::log(gamma);

  // Accumulate shell masses P(|zeta| = s) with a guessed cap, doubling the
  // guess until the complement drops below target. Re-enumeration on a miss
  // is cheap next to the final enumeration the caller will run.
  for (std::int64_t guess = 64;; guess *= 2) {
    if (guess > 1'000'000) {
      throw CertificationError(
          "choose_cap: tail target unreachable below cap 1e6");
    }
    std::vector<double> lf;
    try {
      lf = w.log_f_prefix(guess);
    } catch (const std::out_of_range&) {
      throw CertificationError(
          "choose_cap: weight table too short for the requested tail target");
    }
    CompensatedSum head;
    std::vector<double> upto(static_cast<std::size_t>(guess) + 1, 0.0);
    OrderedEnumerator en(m, guess);
    OrderedConfig zeta;
    while (en.next(zeta)) {
      double lp = log_count(count_orderings(zeta)) +
                  static_cast<double>(zeta.total()) * log_gamma -
                  static_cast<double>(m) * log_z;
      for (std::int64_t v : zeta.occupancies())
        lp += lf[static_cast<std::size_t>(v)];
      upto[static_cast<std::size_t>(zeta.total())] += std::exp(lp);
    }
    for (std::int64_t s = 0; s <= guess; ++s) {
      head.add(upto[static_cast<std::size_t>(s)]);
      if (1.0 - head.value() <= tail_target) return s;
    }
  }
}

namespace {

template <class SupportT>
double tv_impl(const Pmf<SupportT>& p, const Pmf<SupportT>& q) {
  if (!p.support.empty() && !q.support.empty()) {
    std::size_t dp = p.support.front().size();
    std::size_t dq = q.support.front().size();
    if (dp != dq) {
      throw std::invalid_argument("tv_distance: dimension mismatch");
    }
  }
  std::map<SupportT, std::pair<double, double>> joint;
  for (std::size_t i = 0; i < p.support.size(); ++i)
    joint[p.support[i]].first += p.prob[i];
  for (std::size_t i = 0; i < q.support.size(); ++i)
    joint[q.support[i]].second += q.prob[i];
  CompensatedSum abs_diff;
  for (const auto& [state, pq] : joint)
    abs_diff.add(std::abs(pq.first - pq.second));
  // Each certified tail enters at full weight, a deliberately conservative
  // convention: the reported distance never understates the true one.
  return 0.5 * abs_diff.value() + p.meta.tail + q.meta.tail;
}

}  // namespace

double tv_distance(const Pmf<Config>& p, const Pmf<Config>& q) {
  return tv_impl(p, q);
}

double tv_distance(const Pmf<OrderedConfig>& p, const Pmf<OrderedConfig>& q) {
  return tv_impl(p, q);
}

namespace {

SweepRow make_row(const Pmf<OrderedConfig>& nu, const Pmf<OrderedConfig>& mu,
                  std::int64_t n, int m) {
  SweepRow row;
  row.n = n;
  row.tv = tv_distance(nu, mu);
  row.tv_tail_bound = nu.meta.tail + mu.meta.tail;

  CompensatedSum mass_sum, frac_sum;
  for (std::size_t i = 0; i < nu.support.size(); ++i) {
    double tot = static_cast<double>(nu.support[i].total());
    mass_sum.add(nu.prob[i] * tot);
    if (n > 0)
      frac_sum.add(nu.prob[i] * (static_cast<double>(n) - tot) /
                   static_cast<double>(n));
  }
  row.background_density = mass_sum.value() / static_cast<double>(m - 1);
  row.background_err = nu.meta.tail * static_cast<double>(nu.meta.cap) /
                       static_cast<double>(m - 1);
  row.max_site_fraction = n > 0 ? frac_sum.value() : 0.0;
  return row;
}

}  // namespace

std::vector<SweepRow> convergence_sweep(const WeightFamily& w, int m,
                                        std::span<const std::int64_t> n_list,
                                        std::int64_t cap,
                                        std::optional<double> phi, int threads,
                                        ExactMode mode) {
  if (m < 2) throw std::invalid_argument("sweep needs m >= 2");
  if (n_list.empty()) throw std::invalid_argument("empty n_list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw std::invalid_argument("n_list must be strictly increasing");
    }
  }
  if (n_list.front() < 0) throw std::invalid_argument("negative n");

  const double phi_ref = phi.value_or(w.gamma());
  Pmf<OrderedConfig> mu = ordered_gc_pmf(w, m - 1, phi_ref, cap);

  std::vector<SweepRow> rows(n_list.size());
  auto work = [&](std::size_t idx) {
    std::int64_t n = n_list[idx];
    Pmf<OrderedConfig> nu =
        mode == ExactMode::ExactRational
            ? exact::ordered_cut_canonical_pmf(w, m, n, cap)
            : ordered_cut_canonical(w, m, n, cap);
    rows[idx] = make_row(nu, mu, n, m);
  };

  int workers = std::max(1, threads);
  if (workers == 1 || n_list.size() == 1) {
    for (std::size_t i = 0; i < n_list.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < std::min<int>(workers, static_cast<int>(n_list.size()));
         ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t idx = next.fetch_add(1);
          if (idx >= n_list.size()) return;
          try {
            work(idx);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!err) err = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "n,tv,tv_tail_bound,background_density,background_err,"
      "max_site_fraction\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.n);
    out += ',';
    out += csv_double(r.tv);
    out += ',';
    out += csv_double(r.tv_tail_bound);
    out += ',';
    out += csv_double(r.background_density);
    out += ',';
    out += csv_double(r.background_err);
    out += ',';
    out += csv_double(r.max_site_fraction);
    out += '\n';
  }
  return out;
}

}  // namespace condense
