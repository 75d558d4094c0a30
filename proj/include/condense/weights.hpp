#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace condense {

enum class FamilyKind { PowerLaw, GeometricPolynomial, Tabulated };

// Diagnostics for the structural conditions the convergence theory rests on.
// Produced by WeightFamily::check_hypotheses; never throws, so a family that
// fails a condition is reported rather than rejected.
struct HypothesisReport {
  int m = 0;
  std::int64_t n_max = 0;      // requested scan bound
  std::int64_t n_scanned = 0;  // effective bound (tabulated data may clamp it)

  // sup_n (gamma^ceil(n/m) f(ceil(n/m))) / (gamma^n f(n)) over the scan:
  // finite iff the weight sequence admits the subsample growth bound.
  double growth_constant = 0.0;

  // sup_n max/min of gamma^k f(k) over the window k in [n/m, n].
  double window_ratio = 0.0;
  std::int64_t window_argmax = 0;  // n attaining the window_ratio sup

  bool gamma_weight_nonincreasing = true;
  std::optional<std::int64_t> first_violation;  // first k with an increase

  double ratio_estimate = 0.0;   // f(K)/f(K+1) at the scan end K
  double ratio_deviation = 0.0;  // |ratio_estimate - gamma| / gamma

  // sum_n n gamma^n f(n) (unnormalized first moment at the radius), when the
  // series can be certified; empty when it diverges or cannot be bounded.
  std::optional<double> r_star;
};

// A single-site weight sequence f(0), f(1), ... together with the radius of
// convergence gamma of Z(phi) = sum_n phi^n f(n). Instances are immutable
// value handles; copies share a thread-safe memo of log f.
//
// Conventions: f(0) = 1 for the parametric families, and gamma^n f(n) is
// assumed nonincreasing (violations are tracked as diagnostics, not errors).
class WeightFamily {
 public:
  // f(k) = k^-alpha (k >= 1), gamma = 1.
  static WeightFamily power_law(double alpha);
  // f(k) = b^-k k^-alpha (k >= 1), gamma = b.
  static WeightFamily geometric_polynomial(double b, double alpha);
  // Explicit positive weights f(0..N) with a declared radius; tail_at_gamma,
  // if given, is an upper bound on sum_{n>N} gamma^n f(n).
  static WeightFamily tabulated(std::vector<double> values, double gamma,
                                std::optional<double> tail_at_gamma = {});

  // "powerlaw:alpha=3" | "geompoly:b=2,alpha=3" | "table:path=weights.txt"
  static WeightFamily parse(const std::string& spec);
  // Table file: newline-separated positive decimals, plus a "gamma=" line and
  // an optional "tail_at_gamma=" line; '#' starts a comment.
  static WeightFamily load_table(const std::string& path);

  FamilyKind kind() const;
  double gamma() const;
  std::string spec_string() const;
  // Number of tabulated values, for Tabulated families only.
  std::optional<std::int64_t> table_size() const;
  // Parameters of the parametric kinds.
  std::optional<double> alpha() const;
  std::optional<double> geometric_base() const;

  // log f(k); throws std::out_of_range past the end of a tabulated family.
  double log_f(std::int64_t k) const;
  // f(k) itself; for tabulated families this is the stored value, exactly.
  double f(std::int64_t k) const;
  // [log f(0), ..., log f(n)] as a private copy for hot loops.
  std::vector<double> log_f_prefix(std::int64_t n) const;

  // First k at which gamma^k f(k) was observed to increase, among the values
  // evaluated so far. Purely diagnostic.
  std::optional<std::int64_t> monotonicity_violation() const;

  // Z(phi) with certified relative remainder <= rel_tol. For phi < gamma the
  // tail is bounded geometrically via the monotonicity of gamma^n f(n); at
  // phi = gamma an integral-test bracket (parametric families) or the
  // declared tail (tabulated) is used. Throws DivergenceError for
  // phi > gamma or a divergent series, CertificationError when the bound
  // cannot be brought below tolerance within the term budget.
  double partition_function(double phi, double rel_tol = 1e-12) const;

  // R(phi) = first moment / Z, certified to rel_tol.
  double density(double phi, double rel_tol = 1e-10) const;

  // rho_c = R(gamma).
  double critical_density(double rel_tol = 1e-10) const;

  HypothesisReport check_hypotheses(int m, std::int64_t n_max) const;

 private:
  struct Impl;
  explicit WeightFamily(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

}  // namespace condense
