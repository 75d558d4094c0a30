#pragma once

#include "condense/combinatorics.hpp"
#include "condense/errors.hpp"
#include "condense/weights.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condense {

// log F_k(j) for k = 1..m, j = 0..n, where F_k is the k-fold convolution of
// the weight sequence. F_m(n) is the canonical normalizer.
class ConvolutionTable {
 public:
  ConvolutionTable(const WeightFamily& w, int m, std::int64_t n);

  int m() const { return m_; }
  std::int64_t n() const { return n_; }
  double log_partition(int k, std::int64_t j) const;

 private:
  int m_;
  std::int64_t n_;
  std::vector<std::vector<double>> rows_;  // rows_[k-1][j] = log F_k(j)
};

struct PmfMeta {
  int m = 0;                     // number of sites of the measure itself
  std::optional<std::int64_t> n; // canonical particle number, if conditioned
  std::optional<double> phi;     // fugacity, for grand-canonical measures
  std::int64_t cap = 0;          // support enumerated up to |.| <= cap
  double tail = 0.0;             // certified (or observed) mass beyond the cap
  bool cap_warning = false;      // cut-canonical head was asked for cap >= n/2
};

template <class SupportT>
struct Pmf {
  std::vector<SupportT> support;
  std::vector<double> prob;
  PmfMeta meta;

  double head_mass() const {
    double s = 0.0;
    for (double p : prob) s += p;
    return s;
  }

  // Enforces head + tail = 1 within tol; normalization failures indicate a
  // broken certificate, not a quantity to be silently rescaled.
  void validate(double tol = 1e-10) const {
    double total = head_mass() + meta.tail;
    if (!(std::abs(total - 1.0) <= tol)) {
      throw CertificationError("pmf head+tail mass " + std::to_string(total) +
                               " deviates from 1 beyond tolerance");
    }
    for (double p : prob) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw CertificationError("pmf entry is negative or non-finite");
      }
    }
  }
};

// Canonical measure nu_{m,n} on Sigma_{m,n}: p(xi) = prod f(xi_j) / F_m(n).
// Exact support, tail = 0.
Pmf<Config> canonical_pmf(const WeightFamily& w, int m, std::int64_t n);

// Cut-ordered canonical measure: the law of the m-1 smallest order statistics
// under nu_{m,n}, enumerated over |eta| <= cap. Entries that cannot arise
// (n - |eta| < max eta) are kept with probability exactly zero. Requires
// m >= 2; cap may exceed n (such entries are all zero); meta.cap_warning is
// set when cap >= n/2 since the head then overlaps the condensate shoulder.
Pmf<OrderedConfig> ordered_cut_canonical(const WeightFamily& w, int m,
                                         std::int64_t n, std::int64_t cap);

// Ordered grand-canonical product measure at fugacity phi <= gamma:
// p(zeta) = K_m(zeta) phi^|zeta| prod f(zeta_j) / Z(phi)^m over |zeta| <= cap,
// with certified tail mass in meta.tail.
Pmf<OrderedConfig> ordered_gc_pmf(const WeightFamily& w, int m, double phi,
                                  std::int64_t cap);

// Certified upper bound on the ordered grand-canonical mass outside
// {|zeta| <= cap} at phi = gamma.
double tail_mass_bound(const WeightFamily& w, int m, std::int64_t cap);

// Smallest cap with tail_mass_bound <= tail_target.
std::int64_t choose_cap(const WeightFamily& w, int m, double tail_target);

// Total variation distance between two pmfs on a shared support type:
// half the absolute difference over the union of heads, plus both certified
// tails as the worst case. Supports must have matching dimension.
double tv_distance(const Pmf<Config>& p, const Pmf<Config>& q);
double tv_distance(const Pmf<OrderedConfig>& p, const Pmf<OrderedConfig>& q);

struct SweepRow {
  std::int64_t n = 0;
  double tv = 0.0;              // includes tv_tail_bound as worst case
  double tv_tail_bound = 0.0;   // certified tail contribution inside tv
  double background_density = 0.0;
  double background_err = 0.0;
  double max_site_fraction = 0.0;
};

enum class ExactMode { LogDomain, ExactRational };

// For each n: tv between the cut-ordered canonical law and the ordered
// grand-canonical reference at fugacity phi (default gamma), plus background
// statistics. n_list must be strictly increasing. The reference is computed
// once; rows may be computed on `threads` workers with deterministic output.
std::vector<SweepRow> convergence_sweep(
    const WeightFamily& w, int m, std::span<const std::int64_t> n_list,
    std::int64_t cap, std::optional<double> phi = {}, int threads = 1,
    ExactMode mode = ExactMode::LogDomain);

// CSV with header n,tv,tv_tail_bound,background_density,background_err,
// max_site_fraction and LF line endings.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace condense
