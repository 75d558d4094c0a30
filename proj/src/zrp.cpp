#include "condense/zrp.hpp"

#include "condense/csv.hpp"
#include "condense/errors.hpp"
#include "condense/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>

namespace condense {

double rate_g(const WeightFamily& w, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("jump rate needs k >= 1");
  return std::exp(w.log_f(k - 1) - w.log_f(k));
}

JumpKernel::JumpKernel(std::vector<std::vector<double>> rows, std::string name)
    : rows_(std::move(rows)), name_(std::move(name)) {
  const std::size_t m = rows_.size();
  if (m < 2) throw std::invalid_argument("kernel needs at least two sites");
  for (std::size_t x = 0; x < m; ++x) {
    if (rows_[x].size() != m) throw std::invalid_argument("kernel is not square");
    if (rows_[x][x] != 0.0) throw std::invalid_argument("kernel diagonal must be zero");
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
      if (!(rows_[x][y] >= 0.0)) throw std::invalid_argument("negative kernel entry");
      if (std::abs(rows_[x][y] - rows_[y][x]) > 1e-12)
        throw std::invalid_argument("kernel is not symmetric");
      sum += rows_[x][y];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("kernel row does not sum to 1");
  }
  // Irreducibility: BFS over positive entries.
  std::vector<char> seen(m, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    std::size_t x = stack.back();
    stack.pop_back();
    for (std::size_t y = 0; y < m; ++y) {
      if (rows_[x][y] > 0.0 && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(m))
    throw std::invalid_argument("kernel is not irreducible");
}

JumpKernel JumpKernel::ring(int m) {
  if (m < 2) throw std::invalid_argument("ring needs m >= 2");
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (int x = 0; x < m; ++x) {
    int left = (x + m - 1) % m;
    int right = (x + 1) % m;
    // On two sites both neighbors coincide.
    rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(left)] += 0.5;
    rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(right)] += 0.5;
  }
  return JumpKernel(std::move(rows), "ring");
}

JumpKernel JumpKernel::complete_graph(int m) {
  if (m < 2) throw std::invalid_argument("complete graph needs m >= 2");
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m),
                                                       1.0 / (m - 1)));
  for (int x = 0; x < m; ++x) rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(x)] = 0.0;
  return JumpKernel(std::move(rows), "complete");
}

int JumpKernel::sample_destination(int x, double u) const {
  const auto& row = rows_[static_cast<std::size_t>(x)];
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (row[y] > 0.0) {
      acc += row[y];
      last_positive = static_cast<int>(y);
      if (u <= acc) return last_positive;
    }
  }
  // Rounding can leave acc fractionally below 1 for u at the top end.
  return last_positive;
}

ZrpState initial_state(int m, std::int64_t n, std::uint64_t seed,
                       std::uint64_t stream, bool uniform_placement) {
  if (m < 1 || n < 0) throw std::invalid_argument("need m >= 1, n >= 0");
  ZrpState st{Config(static_cast<std::size_t>(m), 0), 0.0,
              CounterRng(seed, stream)};
  if (uniform_placement) {
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t site = static_cast<std::size_t>(
          st.rng.next_below(static_cast<std::uint64_t>(m)));
      ++st.occupancies[site];
    }
  } else {
    st.occupancies[0] = n;
  }
  return st;
}

namespace {

// One Gillespie event, shared by every simulation entry point so the draw
// order (holding time, departure site, destination) is fixed everywhere.
// g[k] must hold the jump rate for occupancy k, k = 1..max occupancy.
void one_event(ZrpState& st, std::span<const double> g,
               const JumpKernel& kernel) {
  const Config& occ = st.occupancies;
  double lambda = 0.0;
  for (std::int64_t v : occ) {
    if (v > 0) lambda += g[static_cast<std::size_t>(v)];
  }
  if (!(lambda > 0.0)) throw std::domain_error("no particles to move");

  double dt = st.rng.next_exponential(lambda);
  double u = st.rng.next_unit() * lambda;
  int site = -1;
  double acc = 0.0;
  for (std::size_t x = 0; x < occ.size(); ++x) {
    if (occ[x] > 0) {
      acc += g[static_cast<std::size_t>(occ[x])];
      site = static_cast<int>(x);
      if (u <= acc) break;
    }
  }
  int dest = kernel.sample_destination(site, st.rng.next_unit());
  st.time += dt;
  --st.occupancies[static_cast<std::size_t>(site)];
  ++st.occupancies[static_cast<std::size_t>(dest)];
}

std::vector<double> rate_table(const WeightFamily& w, std::int64_t n) {
  std::vector<double> g(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)) + 1, 0.0);
  if (n >= 1) {
    std::vector<double> lf = w.log_f_prefix(n);
    for (std::int64_t k = 1; k <= n; ++k) {
      g[static_cast<std::size_t>(k)] =
          std::exp(lf[static_cast<std::size_t>(k - 1)] - lf[static_cast<std::size_t>(k)]);
    }
  }
  return g;
}

}  // namespace

ZrpState step(ZrpState state, const WeightFamily& w, const JumpKernel& kernel) {
  if (static_cast<int>(state.occupancies.size()) != kernel.sites()) {
    throw std::invalid_argument("state and kernel disagree on site count");
  }
  std::int64_t top = 0;
  for (std::int64_t v : state.occupancies) {
    if (v < 0) throw std::invalid_argument("negative occupancy");
    top = std::max(top, v);
  }
  std::vector<double> g = rate_table(w, top);
  one_event(state, g, kernel);
  return state;
}

namespace {

struct ReplicaAccum {
  std::map<Config, std::vector<double>> eta_time;  // per-batch holding time
  std::map<Config, double> full_time;
  std::vector<double> bg;    // per-batch integral of |eta|
  std::vector<double> frac;  // per-batch integral of (n - |eta|)/n
  std::uint64_t events = 0;
};

ReplicaAccum run_replica(const WeightFamily& w, const JumpKernel& kernel,
                         std::int64_t n, double t_burn, double t_total,
                         std::uint64_t seed, std::uint64_t stream,
                         const StationaryOptions& opts) {
  const int m = kernel.sites();
  const int B = opts.batches;
  const double batch_len = (t_total - t_burn) / B;

  ReplicaAccum acc;
  acc.bg.assign(static_cast<std::size_t>(B), 0.0);
  acc.frac.assign(static_cast<std::size_t>(B), 0.0);

  ZrpState st = initial_state(m, n, seed, stream, opts.uniform_init);
  std::vector<double> g = rate_table(w, n);

  Config sorted;
  Config eta;
  auto contribute = [&](const Config& occ, double a, double b) {
    double lo = std::max(a, t_burn);
    double hi = std::min(b, t_total);
    if (hi <= lo) return;
    sorted = occ;
    std::sort(sorted.begin(), sorted.end());
    eta.assign(sorted.begin(), sorted.end() - 1);
    std::int64_t etot = std::accumulate(eta.begin(), eta.end(), std::int64_t{0});

    acc.full_time[occ] += hi - lo;
    auto it = acc.eta_time.find(eta);
    if (it == acc.eta_time.end()) {
      it = acc.eta_time.emplace(eta, std::vector<double>(static_cast<std::size_t>(B), 0.0))
               .first;
    }
    std::vector<double>& per_batch = it->second;

    int b0 = static_cast<int>((lo - t_burn) / batch_len);
    b0 = std::clamp(b0, 0, B - 1);
    double cursor = lo;
    for (int bi = b0; bi < B && cursor < hi; ++bi) {
      double bend = bi == B - 1 ? t_total : t_burn + (bi + 1) * batch_len;
      double seg = std::min(hi, bend) - cursor;
      if (seg > 0.0) {
        per_batch[static_cast<std::size_t>(bi)] += seg;
        acc.bg[static_cast<std::size_t>(bi)] += seg * static_cast<double>(etot);
        acc.frac[static_cast<std::size_t>(bi)] +=
            seg * static_cast<double>(n - etot) / static_cast<double>(n);
      }
      cursor = bend;
    }
  };

  Config prev_occ;
  while (st.time < t_total) {
    prev_occ = st.occupancies;
    double prev_t = st.time;
    one_event(st, g, kernel);
    contribute(prev_occ, prev_t, std::min(st.time, t_total));
    if (st.time >= t_total) break;
    ++acc.events;
  }
  return acc;
}

double sample_sd(const std::vector<double>& xs) {
  std::size_t k = xs.size();
  if (k < 2) return 0.0;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(k - 1));
}

}  // namespace

StationaryEstimate estimate_stationary(const WeightFamily& w,
                                       const JumpKernel& kernel,
                                       std::int64_t n, double t_burn,
                                       double t_total, std::uint64_t seed,
                                       const StationaryOptions& opts) {
  const int m = kernel.sites();
  if (n < 0) throw std::invalid_argument("need n >= 0");
  if (!(t_burn >= 0.0) || !(t_total > t_burn))
    throw std::invalid_argument("need 0 <= t_burn < t_total");
  if (opts.batches < 2) throw std::invalid_argument("need at least 2 batches");
  if (opts.replicas < 1) throw std::invalid_argument("need at least 1 replica");

  StationaryEstimate est;
  est.t_burn = t_burn;
  est.t_total = t_total;
  est.batches = opts.batches;
  est.replicas = opts.replicas;

  if (n == 0) {
    // Empty system: the chain never moves.
    est.nu_hat.support.emplace_back(order(Config(static_cast<std::size_t>(m - 1), 0)));
    est.nu_hat.prob.push_back(1.0);
    est.nu_hat_se.push_back(0.0);
    est.nu_hat.meta = PmfMeta{m - 1, n, {}, 0, 0.0, false};
    est.full.support.emplace_back(Config(static_cast<std::size_t>(m), 0));
    est.full.prob.push_back(1.0);
    est.full.meta = PmfMeta{m, n, {}, 0, 0.0, false};
    return est;
  }

  const int R = opts.replicas;
  const int B = opts.batches;
  std::vector<ReplicaAccum> reps(static_cast<std::size_t>(R));
  auto run_one = [&](int r) {
    reps[static_cast<std::size_t>(r)] =
        run_replica(w, kernel, n, t_burn, t_total, seed,
                    static_cast<std::uint64_t>(r), opts);
  };
  int workers = std::clamp(opts.threads, 1, R);
  if (workers == 1) {
    for (int r = 0; r < R; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          int r = next.fetch_add(1);
          if (r >= R) return;
          run_one(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  const double window = t_total - t_burn;
  const double batch_len = window / B;
  const std::size_t rb = static_cast<std::size_t>(R) * static_cast<std::size_t>(B);

  // Merge replica accumulators; replica r owns global batches [rB, (r+1)B).
  std::map<Config, std::vector<double>> eta_batches;
  std::map<Config, double> full_time;
  std::vector<double> bg(rb, 0.0), frac(rb, 0.0);
  for (int r = 0; r < R; ++r) {
    const ReplicaAccum& acc = reps[static_cast<std::size_t>(r)];
    est.events += acc.events;
    for (const auto& [eta, per_batch] : acc.eta_time) {
      auto it = eta_batches.find(eta);
      if (it == eta_batches.end())
        it = eta_batches.emplace(eta, std::vector<double>(rb, 0.0)).first;
      for (int b = 0; b < B; ++b)
        it->second[static_cast<std::size_t>(r * B + b)] =
            per_batch[static_cast<std::size_t>(b)];
    }
    for (const auto& [occ, tt] : acc.full_time) full_time[occ] += tt;
    for (int b = 0; b < B; ++b) {
      bg[static_cast<std::size_t>(r * B + b)] = acc.bg[static_cast<std::size_t>(b)];
      frac[static_cast<std::size_t>(r * B + b)] = acc.frac[static_cast<std::size_t>(b)];
    }
  }

  std::int64_t max_total_seen = 0;
  double tail = 0.0;
  for (auto& [eta, per_batch] : eta_batches) {
    double total = std::accumulate(per_batch.begin(), per_batch.end(), 0.0);
    double prob = total / (static_cast<double>(R) * window);
    std::int64_t etot = std::accumulate(eta.begin(), eta.end(), std::int64_t{0});
    max_total_seen = std::max(max_total_seen, etot);
    if (opts.cap >= 0 && etot > opts.cap) {
      tail += prob;
      continue;
    }
    for (double& x : per_batch) x /= batch_len;  // per-batch probability
    est.nu_hat.support.emplace_back(order(eta));
    est.nu_hat.prob.push_back(prob);
    est.nu_hat_se.push_back(sample_sd(per_batch) / std::sqrt(static_cast<double>(rb)));
  }
  est.nu_hat.meta.m = m - 1;
  est.nu_hat.meta.n = n;
  est.nu_hat.meta.cap = opts.cap >= 0 ? opts.cap : max_total_seen;
  est.nu_hat.meta.tail = tail;
  est.nu_hat.validate();

  for (const auto& [occ, tt] : full_time) {
    est.full.support.push_back(occ);
    est.full.prob.push_back(tt / (static_cast<double>(R) * window));
  }
  est.full.meta.m = m;
  est.full.meta.n = n;
  est.full.meta.cap = n;
  est.full.validate();

  std::vector<double> bg_est(rb), frac_est(rb);
  CompensatedSum bg_total, frac_total;
  for (std::size_t i = 0; i < rb; ++i) {
    bg_est[i] = bg[i] / batch_len;
    frac_est[i] = frac[i] / batch_len;
    bg_total.add(bg[i]);
    frac_total.add(frac[i]);
  }
  double denom = static_cast<double>(R) * window * static_cast<double>(m - 1);
  est.background_density = bg_total.value() / denom;
  est.background_se =
      sample_sd(bg_est) / std::sqrt(static_cast<double>(rb)) / static_cast<double>(m - 1);
  est.max_site_fraction = frac_total.value() / (static_cast<double>(R) * window);
  est.max_site_se = sample_sd(frac_est) / std::sqrt(static_cast<double>(rb));
  return est;
}

std::vector<TrajectoryPoint> condensate_trajectory(
    const WeightFamily& w, const JumpKernel& kernel, std::int64_t n,
    double t_total, std::uint64_t seed, std::int64_t stride,
    bool uniform_init) {
  const int m = kernel.sites();
  if (n < 0) throw std::invalid_argument("need n >= 0");
  if (!(t_total >= 0.0)) throw std::invalid_argument("need t_total >= 0");
  if (stride < 1) throw std::invalid_argument("need stride >= 1");

  ZrpState st = initial_state(m, n, seed, 0, uniform_init);
  auto snapshot = [&]() {
    TrajectoryPoint p;
    p.t = st.time;
    p.occ = st.occupancies;
    auto it = std::max_element(st.occupancies.begin(), st.occupancies.end());
    p.max_occ = *it;
    p.argmax_site = static_cast<int>(it - st.occupancies.begin()) + 1;
    return p;
  };

  std::vector<TrajectoryPoint> points{snapshot()};
  if (t_total == 0.0 || n == 0) return points;

  std::vector<double> g = rate_table(w, n);
  std::int64_t event = 0;
  for (;;) {
    one_event(st, g, kernel);
    if (st.time > t_total) break;
    ++event;
    if (event % stride == 0) points.push_back(snapshot());
  }
  return points;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points, int m) {
  std::string out = "t,max_occ,argmax_site";
  for (int j = 1; j <= m; ++j) out += ",occ_" + std::to_string(j);
  out += '\n';
  for (const TrajectoryPoint& p : points) {
    out += csv_double(p.t);
    out += ',';
    out += std::to_string(p.max_occ);
    out += ',';
    out += std::to_string(p.argmax_site);
    for (std::int64_t v : p.occ) {
      out += ',';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace condense
