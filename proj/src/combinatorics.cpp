#include "condense/combinatorics.hpp"

#include "condense/errors.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace condense {

namespace {

void check_entries(const Config& occ) {
  if (occ.empty()) throw std::invalid_argument("empty configuration");
  for (std::int64_t v : occ) {
    if (v < 0) throw std::invalid_argument("negative occupancy");
  }
}

BigInt factorial(int k) {
  BigInt r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

void guard_count(const BigInt& count, const char* what) {
  if (count > kEnumerationGuard) {
    throw SizeGuardError(std::string(what) + " enumeration of " +
                         count.str() + " entries exceeds the guard of " +
                         std::to_string(kEnumerationGuard));
  }
}

}  // namespace

OrderedConfig::OrderedConfig(Config occ) : occ_(std::move(occ)) {
  check_entries(occ_);
  if (!std::is_sorted(occ_.begin(), occ_.end())) {
    throw std::invalid_argument("occupancies are not nondecreasing");
  }
}

std::int64_t OrderedConfig::total() const {
  return std::accumulate(occ_.begin(), occ_.end(), std::int64_t{0});
}

OrderedConfig order(const Config& xi) {
  check_entries(xi);
  Config sorted = xi;
  std::sort(sorted.begin(), sorted.end());
  return OrderedConfig(std::move(sorted), OrderedConfig::Unchecked{});
}

OrderedConfig cut(const OrderedConfig& zeta) {
  if (zeta.size() < 2) {
    throw std::invalid_argument("cut needs at least two sites");
  }
  Config head(zeta.occupancies().begin(), zeta.occupancies().end() - 1);
  return OrderedConfig(std::move(head), OrderedConfig::Unchecked{});
}

BigInt count_orderings(const OrderedConfig& zeta) {
  const Config& occ = zeta.occupancies();
  BigInt k = factorial(static_cast<int>(occ.size()));
  std::size_t i = 0;
  while (i < occ.size()) {
    std::size_t j = i;
    while (j < occ.size() && occ[j] == occ[i]) ++j;
    k /= factorial(static_cast<int>(j - i));
    i = j;
  }
  return k;
}

BigInt count_cut_orderings(const OrderedConfig& eta, std::int64_t n, int m) {
  if (m < 2) throw std::invalid_argument("cut counts need m >= 2");
  if (eta.size() != static_cast<std::size_t>(m) - 1) {
    throw std::invalid_argument("eta must have m-1 entries");
  }
  if (n < 0) throw std::invalid_argument("negative particle number");
  std::int64_t leftover = n - eta.total();
  if (leftover < eta.last()) return 0;
  Config full = eta.occupancies();
  full.push_back(leftover);  // still nondecreasing
  return count_orderings(order(full));
}

BigInt sigma_size(int m, std::int64_t n) {
  if (m < 1 || n < 0) throw std::invalid_argument("sigma_size needs m >= 1, n >= 0");
  // C(n+m-1, m-1)
  BigInt num = 1;
  for (int i = 1; i <= m - 1; ++i) {
    num *= n + i;
    num /= i;
  }
  return num;
}

BigInt ordered_size(int m, std::int64_t cap) {
  if (m < 1 || cap < 0) throw std::invalid_argument("ordered_size needs m >= 1, cap >= 0");
  // Nondecreasing m-tuples with sum s are partitions of s into at most m
  // parts, i.e. into parts of size <= m after conjugation.
  std::vector<BigInt> ways(static_cast<std::size_t>(cap) + 1);
  ways[0] = 1;
  for (int part = 1; part <= m; ++part) {
    for (std::int64_t s = part; s <= cap; ++s) {
      ways[static_cast<std::size_t>(s)] +=
          ways[static_cast<std::size_t>(s - part)];
    }
  }
  BigInt total = 0;
  for (const BigInt& w : ways) total += w;
  return total;
}

SigmaEnumerator::SigmaEnumerator(int m, std::int64_t n) : m_(m), n_(n) {
  if (m < 1 || n < 0) throw std::invalid_argument("need m >= 1, n >= 0");
  guard_count(sigma_size(m, n), "Sigma_{m,n}");
  cur_.assign(static_cast<std::size_t>(m), 0);
  cur_.back() = n;
}

bool SigmaEnumerator::next(Config& out) {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    out = cur_;
    return true;
  }
  // Lexicographic successor: bump the rightmost free coordinate (among the
  // first m-1), zero everything after it, and rebalance onto the last site.
  for (int i = m_ - 2; i >= 0; --i) {
    std::int64_t used = 0;
    for (int j = 0; j <= i; ++j) used += cur_[static_cast<std::size_t>(j)];
    if (used + 1 <= n_) {
      ++cur_[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < m_ - 1; ++j) cur_[static_cast<std::size_t>(j)] = 0;
      cur_[static_cast<std::size_t>(m_ - 1)] = n_ - used - 1;
      out = cur_;
      return true;
    }
  }
  done_ = true;
  return false;
}

OrderedEnumerator::OrderedEnumerator(int m, std::int64_t cap)
    : m_(m), cap_(cap) {
  if (m < 1 || cap < 0) throw std::invalid_argument("need m >= 1, cap >= 0");
  guard_count(ordered_size(m, cap), "ordered configuration");
  cur_.assign(static_cast<std::size_t>(m), 0);
}

bool OrderedEnumerator::next(OrderedConfig& out) {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    out = order(cur_);
    return true;
  }
  // Successor in lexicographic order within the nondecreasing cone: raise a
  // coordinate and level everything to its right up to it; feasible iff the
  // leveled tail still fits under the cap.
  for (int i = m_ - 1; i >= 0; --i) {
    std::int64_t cand = cur_[static_cast<std::size_t>(i)] + 1;
    std::int64_t prefix = 0;
    for (int j = 0; j < i; ++j) prefix += cur_[static_cast<std::size_t>(j)];
    if (prefix + cand * (m_ - i) <= cap_) {
      for (int j = i; j < m_; ++j) cur_[static_cast<std::size_t>(j)] = cand;
      out = order(cur_);
      return true;
    }
  }
  done_ = true;
  return false;
}

std::vector<Config> enumerate_sigma(int m, std::int64_t n) {
  std::vector<Config> all;
  SigmaEnumerator en(m, n);
  Config c;
  while (en.next(c)) all.push_back(c);
  return all;
}

std::vector<OrderedConfig> enumerate_ordered(int m, std::int64_t cap) {
  std::vector<OrderedConfig> all;
  OrderedEnumerator en(m, cap);
  OrderedConfig c;
  while (en.next(c)) all.push_back(c);
  return all;
}

}  // namespace condense
