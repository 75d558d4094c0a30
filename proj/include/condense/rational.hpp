#pragma once

#include "condense/combinatorics.hpp"
#include "condense/ensemble.hpp"
#include "condense/weights.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <utility>
#include <vector>

// Exact big-rational evaluation of the canonical objects, used as an
// independent cross-check of the log-domain path. Restricted to families
// whose weights are exactly representable: integer-exponent power laws and
// geometric-polynomial families, and tabulated values (each double is itself
// a rational). Deliberately slow; guarded to small m and n.
namespace condense::exact {

using Rational = boost::multiprecision::cpp_rational;

// Guards for the O(m n^2) rational convolution.
inline constexpr std::int64_t kMaxRationalN = 48;
inline constexpr int kMaxRationalM = 4;

Rational rational_f(const WeightFamily& w, std::int64_t k);

// rows[k-1][j] = F_k(j) exactly.
std::vector<std::vector<Rational>> convolution_table(const WeightFamily& w,
                                                     int m, std::int64_t n);

std::vector<std::pair<Config, Rational>> canonical_pmf(const WeightFamily& w,
                                                       int m, std::int64_t n);

std::vector<std::pair<OrderedConfig, Rational>> ordered_cut_canonical(
    const WeightFamily& w, int m, std::int64_t n, std::int64_t cap);

// The same head as condense::ordered_cut_canonical, with probabilities
// rounded from exact rationals.
Pmf<OrderedConfig> ordered_cut_canonical_pmf(const WeightFamily& w, int m,
                                             std::int64_t n, std::int64_t cap);

double to_double(const Rational& r);

}  // namespace condense::exact
