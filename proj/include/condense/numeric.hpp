#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace condense {

// Neumaier variant of Kahan summation: the compensation also captures the
// case where the incoming term is larger than the running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double neg_infinity() {
  return -std::numeric_limits<double>::infinity();
}

// log(sum_i exp(x_i)) with the max factored out; -inf entries are skipped so
// log-domain zeros behave as exact zeros.
inline double log_sum_exp(std::span<const double> xs) {
  double mx = neg_infinity();
  for (double x : xs) {
    if (x > mx) mx = x;
  }
  if (mx == neg_infinity()) return mx;
  CompensatedSum s;
  for (double x : xs) {
    if (x != neg_infinity()) s.add(std::exp(x - mx));
  }
  return mx + std::log(s.value());
}

}  // namespace condense
