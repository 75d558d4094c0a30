#pragma once

#include <cmath>
#include <cstdint>

namespace condense {

// Counter-based generator in the splitmix64 style: output is a pure function
// of (seed, stream, counter), so parallel replicas draw from provably
// disjoint streams and a state can be reproduced from its draw count alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_key(seed, stream)) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix(key_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  // Uniform on (0, 1]; never 0, so -log stays finite.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

  // Uniform integer in [0, bound) via the fixed-point multiply reduction.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + 0x632BE59BD9B4E019ull));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace condense
