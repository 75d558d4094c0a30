#pragma once

#include <stdexcept>
#include <string>
#include <cstdint>

namespace condense {

// A requested series lies outside its region of convergence (fugacity above
// the radius, or a divergent moment at the radius). Carries the partial sum
// accumulated before giving up, as a diagnostic.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double partial_sum = 0.0,
                  std::int64_t terms = 0)
      : std::runtime_error(what), partial_sum_(partial_sum), terms_(terms) {}

  double partial_sum() const noexcept { return partial_sum_; }
  std::int64_t terms() const noexcept { return terms_; }

 private:
  double partial_sum_;
  std::int64_t terms_;
};

// An enumeration or table would exceed a configured size guard.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A certified tolerance cannot be met (no usable tail bound, or the term
// budget ran out before the bound dropped below tolerance).
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed family spec, table file, or CLI configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace condense
