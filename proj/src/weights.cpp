#include "condense/weights.hpp"

#include "condense/errors.hpp"
#include "condense/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace condense {

namespace {

// Term budget for certified series evaluation. Memoized log f grows to the
// same order, so this also caps memory.
constexpr std::int64_t kMaxSeriesTerms = 2'000'000;

// Relative slack when deciding whether phi sits at the radius.
constexpr double kPhiEps = 1e-12;

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " value '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

struct WeightFamily::Impl {
  FamilyKind kind;
  double gamma = 1.0;
  double alpha = 0.0;
  double b = 1.0;
  std::vector<double> table_log;     // Tabulated only
  std::vector<double> table_values;  // Tabulated only, as given
  std::optional<double> tail_at_gamma;
  std::string spec;

  mutable std::shared_mutex mu;
  mutable std::vector<double> memo;
  mutable std::optional<std::int64_t> first_violation;

  double raw_log_f(std::int64_t k) const {
    switch (kind) {
      case FamilyKind::PowerLaw:
        return k == 0 ? 0.0 : -alpha * std::log(static_cast<double>(k));
      case FamilyKind::GeometricPolynomial:
        return k == 0 ? 0.0
                      : -static_cast<double>(k) * std::log(b) -
                            alpha * std::log(static_cast<double>(k));
      case FamilyKind::Tabulated:
        if (k < 0 || static_cast<std::size_t>(k) >= table_log.size()) {
          throw std::out_of_range("tabulated weight index " +
                                  std::to_string(k) + " out of range");
        }
        return table_log[static_cast<std::size_t>(k)];
    }
    throw std::logic_error("unreachable family kind");
  }

  std::int64_t max_index() const {
    return kind == FamilyKind::Tabulated
               ? static_cast<std::int64_t>(table_log.size()) - 1
               : std::numeric_limits<std::int64_t>::max();
  }

  // Caller holds the unique lock. Extends the memo through k and keeps the
  // gamma^k f(k) monotonicity diagnostic current.
  void fill_locked(std::int64_t k) const {
    if (k > max_index()) {
      throw std::out_of_range("tabulated weight index " + std::to_string(k) +
                              " out of range");
    }
    std::int64_t old = static_cast<std::int64_t>(memo.size());
    if (k < old) return;
    if (static_cast<std::size_t>(k) >= memo.capacity()) {
      // Double so that the one-index-at-a-time misses of the series loops
      // stay amortized; an unconditional reserve would reallocate per call.
      std::int64_t grow = std::max<std::int64_t>(k + 1, old * 2);
      if (kind == FamilyKind::Tabulated)
        grow = std::min(grow, static_cast<std::int64_t>(table_log.size()));
      memo.reserve(static_cast<std::size_t>(grow));
    }
    const double lg = std::log(gamma);
    for (std::int64_t i = old; i <= k; ++i) {
      memo.push_back(raw_log_f(i));
      if (i >= 1 && !first_violation) {
        double cur = static_cast<double>(i) * lg + memo[i];
        double prev = static_cast<double>(i - 1) * lg + memo[i - 1];
        double slack = 1e-12 * std::max(1.0, std::abs(prev));
        if (cur > prev + slack) first_violation = i;
      }
    }
  }

  double log_f(std::int64_t k) const {
    if (k < 0) throw std::out_of_range("negative weight index");
    {
      std::shared_lock lock(mu);
      if (static_cast<std::size_t>(k) < memo.size())
        return memo[static_cast<std::size_t>(k)];
    }
    std::unique_lock lock(mu);
    fill_locked(k);
    return memo[static_cast<std::size_t>(k)];
  }

  // Series sum_n n^w phi^n f(n), w in {0, 1}, with a certified relative
  // remainder. Returns the value; the certificate is the procedure.
  double sum_series(int w, double phi, double rel_tol) const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(phi >= 0.0) || !std::isfinite(phi))
      throw std::invalid_argument("phi must be finite and >= 0");
    if (phi > gamma * (1.0 + kPhiEps)) {
      throw DivergenceError("phi = " + std::to_string(phi) +
                                " exceeds the radius gamma = " +
                                std::to_string(gamma),
                            0.0, 0);
    }
    if (phi == 0.0) return w == 0 ? std::exp(log_f(0)) : 0.0;

    bool at_gamma = phi >= gamma * (1.0 - kPhiEps);
    if (at_gamma) return sum_series_at_gamma(w, rel_tol);

    const double log_phi = std::log(phi);
    const double log_gamma = std::log(gamma);
    const double r = phi / gamma;
    const std::int64_t last = max_index();

    // Bound on sum_{j>nn} j^w phi^j f(j): since gamma^j f(j) is
    // nonincreasing, replace it by its value at nn+1 (or at the table end)
    // and sum the geometric remainder in closed form.
    auto tail_bound = [&](std::int64_t nn) {
      std::int64_t bi = std::min(nn + 1, last);
      double log_head = static_cast<double>(bi) * log_gamma + log_f(bi);
      double log_r_pow = static_cast<double>(nn + 1) * (log_phi - log_gamma);
      if (w == 0) return std::exp(log_head + log_r_pow - std::log1p(-r));
      double num = static_cast<double>(nn + 1) - static_cast<double>(nn) * r;
      return std::exp(log_head + log_r_pow) * num / ((1.0 - r) * (1.0 - r));
    };

    CompensatedSum s;
    if (w == 0) {
      s.add(std::exp(log_f(0)));
      if (tail_bound(0) <= rel_tol * s.value()) return s.value();
    }
    for (std::int64_t nn = 1; nn <= last; ++nn) {
      if (nn > kMaxSeriesTerms) {
        throw CertificationError(
            "series tail bound did not reach tolerance within the term "
            "budget (phi close to gamma?)");
      }
      double lt = static_cast<double>(nn) * log_phi + log_f(nn);
      if (w == 1) lt += std::log(static_cast<double>(nn));
      s.add(std::exp(lt));
      if (tail_bound(nn) <= rel_tol * s.value()) return s.value();
    }
    // Only reachable for tabulated data: every entry was consumed and the
    // continuation bound is still above tolerance.
    throw CertificationError(
        "weight table exhausted before the tail bound reached tolerance");
  }

  double sum_series_at_gamma(int w, double rel_tol) const {
    const double log_gamma = std::log(gamma);
    if (kind == FamilyKind::Tabulated) {
      if (w == 1) {
        throw CertificationError(
            "tabulated family: no declared tail bound for the first moment "
            "at phi = gamma");
      }
      if (!tail_at_gamma) {
        throw CertificationError(
            "tabulated family: evaluating Z at phi = gamma requires a "
            "declared tail_at_gamma bound");
      }
      CompensatedSum s;
      const std::int64_t last = max_index();
      for (std::int64_t nn = 0; nn <= last; ++nn) {
        s.add(std::exp(static_cast<double>(nn) * log_gamma + log_f(nn)));
      }
      double v = s.value();
      if (*tail_at_gamma > rel_tol * v) {
        throw CertificationError(
            "declared tail_at_gamma exceeds the requested tolerance");
      }
      return v;
    }

    // Parametric families: the term at the radius is n^(w - alpha), monotone
    // decreasing for n >= 1, so the integral test brackets the tail:
    //   (N+1)^p / -p <= sum_{n>N} n^(w-alpha) <= N^p / -p,  p = w - alpha + 1.
    // Return partial sum + bracket midpoint, certified to the half-width.
    const double p = static_cast<double>(w) - alpha + 1.0;
    if (p >= 0.0) {
      CompensatedSum partial;
      std::int64_t terms = std::min<std::int64_t>(100'000, kMaxSeriesTerms);
      if (w == 0) partial.add(std::exp(log_f(0)));
      for (std::int64_t nn = 1; nn <= terms; ++nn) {
        double lt = static_cast<double>(nn) * log_gamma + log_f(nn);
        if (w == 1) lt += std::log(static_cast<double>(nn));
        partial.add(std::exp(lt));
      }
      throw DivergenceError(
          w == 0 ? "partition function diverges at phi = gamma (alpha <= 1)"
                 : "first moment diverges at phi = gamma (alpha <= 2)",
          partial.value(), terms);
    }
    CompensatedSum s;
    if (w == 0) s.add(std::exp(log_f(0)));
    for (std::int64_t nn = 1;; ++nn) {
      if (nn > kMaxSeriesTerms) {
        throw CertificationError(
            "integral-test bracket did not reach tolerance within the term "
            "budget");
      }
      double lt = static_cast<double>(nn) * log_gamma + log_f(nn);
      if (w == 1) lt += std::log(static_cast<double>(nn));
      s.add(std::exp(lt));
      double hi = std::pow(static_cast<double>(nn), p) / (-p);
      double lo = std::pow(static_cast<double>(nn + 1), p) / (-p);
      double mid = 0.5 * (hi + lo);
      double half_width = 0.5 * (hi - lo);
      if (half_width <= rel_tol * (s.value() + mid)) {
        return s.value() + mid;
      }
    }
  }
};

WeightFamily::WeightFamily(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

WeightFamily WeightFamily::power_law(double alpha) {
  if (!std::isfinite(alpha)) throw ConfigError("powerlaw: alpha must be finite");
  auto impl = std::make_shared<Impl>();
  impl->kind = FamilyKind::PowerLaw;
  impl->alpha = alpha;
  impl->gamma = 1.0;
  std::ostringstream os;
  os << "powerlaw:alpha=" << alpha;
  impl->spec = os.str();
  return WeightFamily(std::move(impl));
}

WeightFamily WeightFamily::geometric_polynomial(double b, double alpha) {
  if (!(b > 0.0) || !std::isfinite(b))
    throw ConfigError("geompoly: b must be positive and finite");
  if (!std::isfinite(alpha)) throw ConfigError("geompoly: alpha must be finite");
  auto impl = std::make_shared<Impl>();
  impl->kind = FamilyKind::GeometricPolynomial;
  impl->alpha = alpha;
  impl->b = b;
  impl->gamma = b;
  std::ostringstream os;
  os << "geompoly:b=" << b << ",alpha=" << alpha;
  impl->spec = os.str();
  return WeightFamily(std::move(impl));
}

WeightFamily WeightFamily::tabulated(std::vector<double> values, double gamma,
                                     std::optional<double> tail_at_gamma) {
  if (values.empty()) throw ConfigError("tabulated family needs at least one value");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("tabulated family: gamma must be positive and finite");
  auto impl = std::make_shared<Impl>();
  impl->kind = FamilyKind::Tabulated;
  impl->gamma = gamma;
  impl->tail_at_gamma = tail_at_gamma;
  impl->table_log.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw ConfigError("tabulated weight f(" + std::to_string(i) +
                        ") must be positive and finite");
    }
    impl->table_log.push_back(std::log(values[i]));
  }
  impl->table_values = std::move(values);
  impl->spec = "table:<inline," + std::to_string(impl->table_values.size()) +
               " values>";
  return WeightFamily(std::move(impl));
}

WeightFamily WeightFamily::parse(const std::string& spec) {
  auto colon = spec.find(':');
  std::string head = trim(colon == std::string::npos ? spec : spec.substr(0, colon));
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  std::vector<std::pair<std::string, std::string>> kv;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("family parameter '" + item + "' is not key=value");
    kv.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    for (auto it = kv.begin(); it != kv.end(); ++it) {
      if (it->first == key) {
        std::string v = it->second;
        kv.erase(it);
        return v;
      }
    }
    return std::nullopt;
  };
  auto reject_leftovers = [&]() {
    if (!kv.empty())
      throw ConfigError("unknown family parameter '" + kv.front().first + "'");
  };

  if (head == "powerlaw") {
    auto a = take("alpha");
    if (!a) throw ConfigError("powerlaw requires alpha=");
    reject_leftovers();
    return power_law(parse_number(*a, "alpha"));
  }
  if (head == "geompoly") {
    auto b = take("b");
    auto a = take("alpha");
    if (!b || !a) throw ConfigError("geompoly requires b= and alpha=");
    reject_leftovers();
    return geometric_polynomial(parse_number(*b, "b"),
                                parse_number(*a, "alpha"));
  }
  if (head == "table") {
    auto p = take("path");
    if (!p) throw ConfigError("table requires path=");
    reject_leftovers();
    return load_table(*p);
  }
  throw ConfigError("unknown weight family '" + head + "'");
}

WeightFamily WeightFamily::load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weight table '" + path + "'");
  std::optional<double> gamma, tail;
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq != std::string::npos) {
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key == "gamma") {
        gamma = parse_number(val, "gamma");
      } else if (key == "tail_at_gamma") {
        tail = parse_number(val, "tail_at_gamma");
      } else {
        throw ConfigError("unknown header '" + key + "' in table '" + path +
                          "' line " + std::to_string(lineno));
      }
      continue;
    }
    values.push_back(parse_number(line, "weight"));
  }
  if (!gamma) throw ConfigError("table '" + path + "' is missing a gamma= line");
  auto fam = tabulated(std::move(values), *gamma, tail);
  // Keep the user's locator in reports.
  auto impl = std::const_pointer_cast<Impl>(fam.impl_);
  impl->spec = "table:path=" + path;
  return fam;
}

FamilyKind WeightFamily::kind() const { return impl_->kind; }
double WeightFamily::gamma() const { return impl_->gamma; }
std::string WeightFamily::spec_string() const { return impl_->spec; }

std::optional<std::int64_t> WeightFamily::table_size() const {
  if (impl_->kind != FamilyKind::Tabulated) return std::nullopt;
  return static_cast<std::int64_t>(impl_->table_log.size());
}

std::optional<double> WeightFamily::alpha() const {
  if (impl_->kind == FamilyKind::Tabulated) return std::nullopt;
  return impl_->alpha;
}

std::optional<double> WeightFamily::geometric_base() const {
  if (impl_->kind != FamilyKind::GeometricPolynomial) return std::nullopt;
  return impl_->b;
}

double WeightFamily::log_f(std::int64_t k) const { return impl_->log_f(k); }

double WeightFamily::f(std::int64_t k) const {
  if (impl_->kind == FamilyKind::Tabulated) {
    if (k < 0 || static_cast<std::size_t>(k) >= impl_->table_values.size()) {
      throw std::out_of_range("tabulated weight index " + std::to_string(k) +
                              " out of range");
    }
    return impl_->table_values[static_cast<std::size_t>(k)];
  }
  return std::exp(impl_->log_f(k));
}

std::vector<double> WeightFamily::log_f_prefix(std::int64_t n) const {
  if (n < 0) throw std::out_of_range("negative prefix length");
  impl_->log_f(n);  // force fill
  std::shared_lock lock(impl_->mu);
  return std::vector<double>(impl_->memo.begin(),
                             impl_->memo.begin() + (n + 1));
}

std::optional<std::int64_t> WeightFamily::monotonicity_violation() const {
  std::shared_lock lock(impl_->mu);
  return impl_->first_violation;
}

double WeightFamily::partition_function(double phi, double rel_tol) const {
  return impl_->sum_series(0, phi, rel_tol);
}

double WeightFamily::density(double phi, double rel_tol) const {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (phi == 0.0) return 0.0;
  // Split the budget: |a/b - a'/b'| <= (|da|/a + |db|/b) a/b to first order.
  double num = impl_->sum_series(1, phi, rel_tol / 3.0);
  double den = impl_->sum_series(0, phi, rel_tol / 3.0);
  return num / den;
}

double WeightFamily::critical_density(double rel_tol) const {
  return density(impl_->gamma, rel_tol);
}

HypothesisReport WeightFamily::check_hypotheses(int m,
                                                std::int64_t n_max) const {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  HypothesisReport rep;
  rep.m = m;
  rep.n_max = n_max;

  // Tabulated data limits the scan; keep one index spare for the ratio.
  std::int64_t scan = n_max;
  if (auto ts = table_size()) scan = std::min<std::int64_t>(scan, *ts - 2);
  if (scan < 1) scan = 1;
  rep.n_scanned = scan;

  std::vector<double> lw = log_f_prefix(std::min(scan + 1, impl_->max_index()));
  const double lg = std::log(impl_->gamma);
  auto L = [&](std::int64_t k) {
    return static_cast<double>(k) * lg + lw[static_cast<std::size_t>(k)];
  };

  {
    std::shared_lock lock(impl_->mu);
    rep.first_violation = impl_->first_violation;
    if (rep.first_violation && *rep.first_violation <= scan)
      rep.gamma_weight_nonincreasing = false;
    else
      rep.first_violation = std::nullopt;  // outside the reported scan
  }

  // Subsample growth: sup over n of L(ceil(n/m)) - L(n).
  double best_growth = 0.0;
  for (std::int64_t nn = 1; nn <= scan; ++nn) {
    std::int64_t k = (nn + m - 1) / m;
    best_growth = std::max(best_growth, L(k) - L(nn));
  }
  rep.growth_constant = std::exp(best_growth);

  // Window ratio: sliding max/min of L over k in [ceil(n/m), n], advanced
  // with monotone deques so the full scan is linear.
  std::deque<std::int64_t> maxq, minq;
  std::int64_t lo = 1, hi = 0;
  double best_ratio = 0.0;
  std::int64_t best_n = 1;
  for (std::int64_t nn = 1; nn <= scan; ++nn) {
    std::int64_t new_lo = (nn + m - 1) / m;
    while (hi < nn) {
      ++hi;
      while (!maxq.empty() && L(maxq.back()) <= L(hi)) maxq.pop_back();
      maxq.push_back(hi);
      while (!minq.empty() && L(minq.back()) >= L(hi)) minq.pop_back();
      minq.push_back(hi);
    }
    while (lo < new_lo) {
      if (!maxq.empty() && maxq.front() == lo) maxq.pop_front();
      if (!minq.empty() && minq.front() == lo) minq.pop_front();
      ++lo;
    }
    double ratio = L(maxq.front()) - L(minq.front());
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_n = nn;
    }
  }
  rep.window_ratio = std::exp(best_ratio);
  rep.window_argmax = best_n;

  std::int64_t K = std::min(scan, static_cast<std::int64_t>(lw.size()) - 2);
  if (K >= 1) {
    rep.ratio_estimate = std::exp(lw[static_cast<std::size_t>(K)] -
                                  lw[static_cast<std::size_t>(K + 1)]);
    rep.ratio_deviation =
        std::abs(rep.ratio_estimate - impl_->gamma) / impl_->gamma;
  }

  try {
    rep.r_star = impl_->sum_series(1, impl_->gamma, 1e-6);
  } catch (const std::exception&) {
    rep.r_star = std::nullopt;
  }
  return rep;
}

}  // namespace condense
