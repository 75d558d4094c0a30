#include "condense/rational.hpp"

#include "condense/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace condense::exact {

namespace {

// Every finite double is mantissa * 2^e exactly.
Rational rational_of_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  int e = 0;
  double mant = std::frexp(x, &e);
  // 53 bits always suffice.
  auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  e -= 53;
  Rational r(scaled);
  BigInt two = 1;
  two <<= std::abs(e);
  if (e >= 0) {
    r *= Rational(two);
  } else {
    r /= Rational(two);
  }
  return r;
}

Rational pow_rational(const Rational& base, std::int64_t e) {
  if (e < 0) return Rational(1) / pow_rational(base, -e);
  Rational acc = 1;
  Rational b = base;
  std::int64_t k = e;
  while (k > 0) {
    if (k & 1) acc *= b;
    b *= b;
    k >>= 1;
  }
  return acc;
}

std::int64_t integer_exponent(double alpha, const char* what) {
  double r = std::nearbyint(alpha);
  if (r != alpha || std::abs(r) > 60) {
    throw CertificationError(std::string(what) +
                             ": exact rational mode needs a small integer "
                             "exponent, got " +
                             std::to_string(alpha));
  }
  return static_cast<std::int64_t>(r);
}

void guard(int m, std::int64_t n) {
  if (m < 1 || n < 0) throw std::invalid_argument("need m >= 1, n >= 0");
  if (n > kMaxRationalN || m > kMaxRationalM) {
    throw SizeGuardError("exact rational mode is guarded to m <= " +
                         std::to_string(kMaxRationalM) + ", n <= " +
                         std::to_string(kMaxRationalN));
  }
}

}  // namespace

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational rational_f(const WeightFamily& w, std::int64_t k) {
  if (k < 0) throw std::out_of_range("negative weight index");
  switch (w.kind()) {
    case FamilyKind::PowerLaw: {
      if (k == 0) return 1;
      std::int64_t a = integer_exponent(*w.alpha(), "powerlaw");
      return pow_rational(Rational(k), -a);
    }
    case FamilyKind::GeometricPolynomial: {
      if (k == 0) return 1;
      std::int64_t a = integer_exponent(*w.alpha(), "geompoly");
      Rational b = rational_of_double(*w.geometric_base());
      return pow_rational(b, -k) * pow_rational(Rational(k), -a);
    }
    case FamilyKind::Tabulated:
      return rational_of_double(w.f(k));
  }
  throw std::logic_error("unreachable family kind");
}

std::vector<std::vector<Rational>> convolution_table(const WeightFamily& w,
                                                     int m, std::int64_t n) {
  guard(m, n);
  std::vector<Rational> f(static_cast<std::size_t>(n) + 1);
  for (std::int64_t k = 0; k <= n; ++k)
    f[static_cast<std::size_t>(k)] = rational_f(w, k);

  std::vector<std::vector<Rational>> rows;
  rows.push_back(f);
  for (int k = 2; k <= m; ++k) {
    const auto& prev = rows.back();
    std::vector<Rational> row(static_cast<std::size_t>(n) + 1);
    for (std::int64_t j = 0; j <= n; ++j) {
      Rational s = 0;
      for (std::int64_t i = 0; i <= j; ++i) {
        s += prev[static_cast<std::size_t>(j - i)] *
             f[static_cast<std::size_t>(i)];
      }
      row[static_cast<std::size_t>(j)] = s;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::pair<Config, Rational>> canonical_pmf(const WeightFamily& w,
                                                       int m, std::int64_t n) {
  guard(m, n);
  auto table = convolution_table(w, m, n);
  const Rational& norm = table[static_cast<std::size_t>(m - 1)]
                              [static_cast<std::size_t>(n)];
  std::vector<Rational> f(static_cast<std::size_t>(n) + 1);
  for (std::int64_t k = 0; k <= n; ++k)
    f[static_cast<std::size_t>(k)] = rational_f(w, k);

  std::vector<std::pair<Config, Rational>> out;
  SigmaEnumerator en(m, n);
  Config xi;
  while (en.next(xi)) {
    Rational p = 1;
    for (std::int64_t v : xi) p *= f[static_cast<std::size_t>(v)];
    p /= norm;
    out.emplace_back(xi, std::move(p));
  }
  return out;
}

std::vector<std::pair<OrderedConfig, Rational>> ordered_cut_canonical(
    const WeightFamily& w, int m, std::int64_t n, std::int64_t cap) {
  if (m < 2) throw std::invalid_argument("cut measure needs m >= 2");
  guard(m, n);
  auto table = convolution_table(w, m, n);
  const Rational& norm = table[static_cast<std::size_t>(m - 1)]
                              [static_cast<std::size_t>(n)];
  std::int64_t fmax = std::max(cap, n);
  std::vector<Rational> f(static_cast<std::size_t>(fmax) + 1);
  for (std::int64_t k = 0; k <= fmax; ++k)
    f[static_cast<std::size_t>(k)] = rational_f(w, k);

  std::vector<std::pair<OrderedConfig, Rational>> out;
  OrderedEnumerator en(m - 1, cap);
  OrderedConfig eta;
  while (en.next(eta)) {
    Rational p = 0;
    std::int64_t leftover = n - eta.total();
    if (leftover >= eta.last()) {
      Rational num = Rational(count_cut_orderings(eta, n, m)) *
                     f[static_cast<std::size_t>(leftover)];
      for (std::int64_t v : eta.occupancies())
        num *= f[static_cast<std::size_t>(v)];
      p = num / norm;
    }
    out.emplace_back(eta, std::move(p));
  }
  return out;
}

Pmf<OrderedConfig> ordered_cut_canonical_pmf(const WeightFamily& w, int m,
                                             std::int64_t n,
                                             std::int64_t cap) {
  auto entries = exact::ordered_cut_canonical(w, m, n, cap);
  Pmf<OrderedConfig> pmf;
  pmf.meta.m = m - 1;
  pmf.meta.n = n;
  pmf.meta.cap = cap;
  pmf.meta.cap_warning = 2 * cap >= n;
  Rational head = 0;
  for (auto& [eta, p] : entries) {
    pmf.support.push_back(eta);
    pmf.prob.push_back(to_double(p));
    head += p;
  }
  Rational tail = Rational(1) - head;
  pmf.meta.tail = tail < 0 ? 0.0 : to_double(tail);
  pmf.validate();
  return pmf;
}

}  // namespace condense::exact
