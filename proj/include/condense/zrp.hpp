#pragma once

#include "condense/combinatorics.hpp"
#include "condense/ensemble.hpp"
#include "condense/rng.hpp"
#include "condense/weights.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace condense {

// Jump rate out of a site holding k >= 1 particles: g(k) = f(k-1)/f(k).
double rate_g(const WeightFamily& w, std::int64_t k);

// Symmetric irreducible jump kernel on m sites with zero diagonal.
class JumpKernel {
 public:
  static JumpKernel ring(int m);
  static JumpKernel complete_graph(int m);
  explicit JumpKernel(std::vector<std::vector<double>> rows,
                      std::string name = "custom");

  int sites() const { return static_cast<int>(rows_.size()); }
  double prob(int x, int y) const { return rows_[x][y]; }
  const std::string& name() const { return name_; }

  // Destination sampled by CDF scan of row x at u in (0, 1].
  int sample_destination(int x, double u) const;

 private:
  std::vector<std::vector<double>> rows_;
  std::string name_;
};

struct ZrpState {
  Config occupancies;
  double time = 0.0;
  CounterRng rng;
};

// Packed start (everything on site 1) or, with uniform_placement, particles
// dropped on sites drawn uniformly with the state's own generator.
ZrpState initial_state(int m, std::int64_t n, std::uint64_t seed,
                       std::uint64_t stream = 0,
                       bool uniform_placement = false);

// One Gillespie event: exponential holding time at the total rate, departure
// site by rate-proportional scan, destination from the kernel row. Draws
// exactly three uniforms per event, in that order. Throws std::domain_error
// on an empty configuration.
ZrpState step(ZrpState state, const WeightFamily& w, const JumpKernel& kernel);

struct StationaryOptions {
  int batches = 32;
  int replicas = 1;
  int threads = 1;
  // Track cut-ordered states with |eta| <= cap; mass seen beyond that is
  // reported as meta.tail. Negative: keep everything observed.
  std::int64_t cap = -1;
  bool uniform_init = false;
};

struct StationaryEstimate {
  // Time-weighted empirical law of the cut-ordered image over (t_burn, t_total].
  Pmf<OrderedConfig> nu_hat;
  // Batch-means standard error per retained support point.
  std::vector<double> nu_hat_se;

  // Time-weighted empirical law of the full configuration (diagnostic).
  Pmf<Config> full;

  double background_density = 0.0;
  double background_se = 0.0;
  double max_site_fraction = 0.0;
  double max_site_se = 0.0;

  std::uint64_t events = 0;  // applied jumps across all replicas
  double t_burn = 0.0;
  double t_total = 0.0;
  int batches = 0;
  int replicas = 0;

  // Worst-case propagation of per-state errors through the TV half-sum.
  double tv_se() const {
    double s = 0.0;
    for (double e : nu_hat_se) s += e;
    return 0.5 * s;
  }
};

// Simulate replicas on disjoint streams of `seed`, average occupancies with
// time weights over (t_burn, t_total], and form batch-means errors from
// `batches` equal-time windows per replica. Deterministic for fixed
// (seed, options), independent of thread count.
StationaryEstimate estimate_stationary(const WeightFamily& w,
                                       const JumpKernel& kernel,
                                       std::int64_t n, double t_burn,
                                       double t_total, std::uint64_t seed,
                                       const StationaryOptions& opts = {});

struct TrajectoryPoint {
  double t = 0.0;
  std::int64_t max_occ = 0;
  int argmax_site = 0;  // 1-based; smallest site among ties
  Config occ;
};

// Event-time samples (thinned to every stride-th event) of the running
// maximum, starting with the initial state. t_total = 0 yields only that.
std::vector<TrajectoryPoint> condensate_trajectory(
    const WeightFamily& w, const JumpKernel& kernel, std::int64_t n,
    double t_total, std::uint64_t seed, std::int64_t stride = 1,
    bool uniform_init = false);

// CSV with header t,max_occ,argmax_site,occ_1,...,occ_m.
std::string trajectory_csv(const std::vector<TrajectoryPoint>& points, int m);

}  // namespace condense
