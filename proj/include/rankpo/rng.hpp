#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rankpo {

// Deterministic random source. All draws are derived from std::mt19937_64
// (whose output sequence is fixed by the standard) through the explicit
// algorithms below, so identical seeds produce identical sequences on any
// platform. Never use std::uniform_*_distribution here: those are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Unbiased via rejection.
  std::size_t index(std::size_t n);

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 gen_;
};

}  // namespace rankpo
