#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <vector>

namespace condense {

using BigInt = boost::multiprecision::cpp_int;

// Occupancy vector on sites 1..m. Totals stay within int64 by construction.
using Config = std::vector<std::int64_t>;

// An occupancy vector in nondecreasing order (the image of the order map).
class OrderedConfig {
 public:
  OrderedConfig() = default;
  explicit OrderedConfig(Config occ);  // throws std::invalid_argument

  const Config& occupancies() const { return occ_; }
  std::size_t size() const { return occ_.size(); }
  std::int64_t operator[](std::size_t i) const { return occ_[i]; }
  std::int64_t total() const;
  std::int64_t last() const { return occ_.back(); }

  friend auto operator<=>(const OrderedConfig&, const OrderedConfig&) = default;

 private:
  friend OrderedConfig order(const Config&);
  friend OrderedConfig cut(const OrderedConfig&);
  struct Unchecked {};
  OrderedConfig(Config occ, Unchecked) : occ_(std::move(occ)) {}
  Config occ_;
};

// Sort ascending.
OrderedConfig order(const Config& xi);

// Drop the last (maximal) entry; requires at least two sites.
OrderedConfig cut(const OrderedConfig& zeta);

// K_m(zeta): number of distinct permutations of zeta, m!/prod(multiplicities!).
BigInt count_orderings(const OrderedConfig& zeta);

// K_{m-1,n}(eta): number of configurations in Sigma_{m,n} whose cut-ordered
// image is eta. Zero when the leftover n - |eta| is smaller than max(eta);
// otherwise K_m of eta with the leftover appended. eta must have m-1 entries.
BigInt count_cut_orderings(const OrderedConfig& eta, std::int64_t n, int m);

// |Sigma_{m,n}| = C(n+m-1, m-1).
BigInt sigma_size(int m, std::int64_t n);
// #{eta nondecreasing, m entries, |eta| <= cap}.
BigInt ordered_size(int m, std::int64_t cap);

// Lexicographic enumeration of Sigma_{m,n} = {xi : |xi| = n}. The constructor
// enforces the global enumeration guard.
class SigmaEnumerator {
 public:
  SigmaEnumerator(int m, std::int64_t n);
  bool next(Config& out);

 private:
  int m_;
  std::int64_t n_;
  Config cur_;
  bool done_ = false;
  bool started_ = false;
};

// Lexicographic enumeration of {eta nondecreasing : |eta| <= cap}.
class OrderedEnumerator {
 public:
  OrderedEnumerator(int m, std::int64_t cap);
  bool next(OrderedConfig& out);

 private:
  int m_;
  std::int64_t cap_;
  Config cur_;
  bool done_ = false;
  bool started_ = false;
};

std::vector<Config> enumerate_sigma(int m, std::int64_t n);
std::vector<OrderedConfig> enumerate_ordered(int m, std::int64_t cap);

// Enumerations larger than this throw SizeGuardError.
inline constexpr std::int64_t kEnumerationGuard = 100'000'000;

}  // namespace condense
