#include "lare/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lare/error.hpp"

namespace lare {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) fail_usage("Rng::below: bound must be positive");
  if ((bound & (bound - 1)) == 0) return next_u64() & (bound - 1);
  // Reject the tail of the range so every residue is equally likely.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::gauss() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1, u2;
  do {
    u1 = unit();
  } while (u1 <= 0.0);
  u2 = unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * 3.14159265358979323846 * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::vector<uint64_t> Rng::sample_indices(uint64_t population, uint64_t k) {
  if (k > population) fail_usage("sample_indices: k exceeds population");
  if (k == 0) return {};
  // Dense Fisher-Yates when we take a large fraction, hash rejection otherwise.
  if (k * 3 >= population) {
    std::vector<uint64_t> all(population);
    for (uint64_t i = 0; i < population; ++i) all[i] = i;
    for (uint64_t i = 0; i < k; ++i) {
      uint64_t j = i + below(population - i);
      std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
  }
  std::unordered_set<uint64_t> seen;
  seen.reserve(k * 2);
  std::vector<uint64_t> out;
  out.reserve(k);
  while (out.size() < k) {
    uint64_t x = below(population);
    if (seen.insert(x).second) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lare
