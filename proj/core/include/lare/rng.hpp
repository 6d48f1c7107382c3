#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lare {

// splitmix64 finalizer; used to derive independent child seeds so that
// per-entity randomness does not depend on iteration order.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// Deterministic RNG wrapper. std::uniform_int_distribution and friends are
// implementation-defined, so every draw here is hand-rolled on top of the
// mt19937_64 bit stream and produces identical sequences on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, bound) via rejection sampling; bound > 0.
  uint64_t below(uint64_t bound);

  // Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (one sample per call, cached pair).
  double gauss();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.empty()) return;
    for (uint64_t i = v.size() - 1; i > 0; --i) {
      uint64_t j = below(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  // k distinct values from [0, population), ascending order.
  std::vector<uint64_t> sample_indices(uint64_t population, uint64_t k);

 private:
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace lare
