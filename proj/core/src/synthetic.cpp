#include "lare/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lare/error.hpp"
#include "lare/rng.hpp"

namespace lare {

namespace {

// Cumulative-weight sampler over a fixed item list.
struct WeightedPool {
  std::vector<uint32_t> items;
  std::vector<double> cumulative;

  void finalize() {
    cumulative.resize(items.size());
    double acc = 0;
    for (size_t i = 0; i < items.size(); ++i) {
      acc += cumulative[i];
      cumulative[i] = acc;
    }
  }
  uint32_t draw(Rng& rng) const {
    const double t = rng.unit() * cumulative.back();
    const auto it =
        std::upper_bound(cumulative.begin(), cumulative.end(), t);
    const size_t pos = std::min<size_t>(it - cumulative.begin(),
                                        cumulative.size() - 1);
    return items[pos];
  }
};

}  // namespace

InteractionMatrix synthesize(const SynthSpec& spec) {
  if (spec.users < 3 || spec.items < 4) fail_usage("synthesize: matrix too small");
  if (spec.clusters == 0 || spec.clusters > spec.items)
    fail_usage("synthesize: cluster count must lie in [1, items]");
  if (spec.affinity < 0 || spec.affinity > 1)
    fail_usage("synthesize: affinity must lie in [0, 1]");
  if (spec.noise_fraction < 0 || spec.noise_fraction > 1)
    fail_usage("synthesize: noise fraction must lie in [0, 1]");
  if (spec.local_skew < 0) fail_usage("synthesize: local skew must be >= 0");
  if (spec.local_coupling < 0 || spec.local_coupling > 1)
    fail_usage("synthesize: local coupling must lie in [0, 1]");
  if (spec.taste_sharpness < 0)
    fail_usage("synthesize: taste sharpness must be >= 0");
  if (spec.min_degree == 0) fail_usage("synthesize: min degree must be >= 1");
  if (spec.events < static_cast<uint64_t>(spec.users) * spec.min_degree)
    fail_usage("synthesize: event target below users * min_degree");

  Rng rng(mix_seed(spec.seed, 0x517));
  const uint32_t m = spec.users, n = spec.items, nc = spec.clusters;

  // Item i has popularity rank i; clusters interleave so each one spans the
  // whole popularity range.
  std::vector<double> weight(n);
  for (uint32_t i = 0; i < n; ++i)
    weight[i] = std::pow(static_cast<double>(i) + spec.popularity_shift,
                         -spec.popularity_skew);
  WeightedPool global;
  std::vector<WeightedPool> pool(nc);
  for (uint32_t i = 0; i < n; ++i) {
    global.items.push_back(i);
    global.cumulative.push_back(weight[i]);
    pool[i % nc].items.push_back(i);
  }
  global.finalize();
  // Within a pool, compressed global popularity is modulated by a shuffled
  // prominence order, so a globally obscure item can still lead its niche.
  for (auto& p : pool) {
    std::vector<uint64_t> rank(p.items.size());
    for (uint64_t r = 0; r < rank.size(); ++r) rank[r] = r;
    rng.shuffle(rank);
    p.cumulative.resize(p.items.size());
    for (size_t k = 0; k < p.items.size(); ++k)
      p.cumulative[k] =
          std::pow(weight[p.items[k]], spec.local_coupling) *
          std::pow(static_cast<double>(rank[k]) + 2.0, -spec.local_skew);
    p.finalize();
  }

  // Degree budget: lognormal spread rescaled onto the event target.
  std::vector<double> spread(m);
  double spread_sum = 0;
  for (uint32_t u = 0; u < m; ++u) {
    spread[u] = std::exp(spec.log_sigma * rng.gauss());
    spread_sum += spread[u];
  }
  const double budget =
      static_cast<double>(spec.events) -
      static_cast<double>(m) * static_cast<double>(spec.min_degree);
  const double scale = budget > 0 ? budget / spread_sum : 0.0;
  const uint32_t degree_cap = std::max<uint32_t>(spec.min_degree, n / 2);

  std::vector<Entry> entries;
  entries.reserve(spec.events + n);
  std::unordered_set<uint32_t> picked;
  std::vector<double> taste(nc);
  for (uint32_t u = 0; u < m; ++u) {
    // Soft taste profile: a log-normal weight per pool, so most users lean on
    // one or two niches but every pool keeps a long-tailed share.
    double acc = 0;
    for (uint32_t p = 0; p < nc; ++p) {
      acc += std::exp(spec.taste_sharpness * rng.gauss());
      taste[p] = acc;
    }

    uint32_t degree = spec.min_degree +
                      static_cast<uint32_t>(std::floor(scale * spread[u]));
    degree = std::min(degree, degree_cap);

    picked.clear();
    uint64_t attempts = 0;
    const uint64_t max_attempts = 60ull * degree + 100;
    while (picked.size() < degree && attempts++ < max_attempts) {
      uint32_t item;
      if (rng.unit() < spec.noise_fraction) {
        item = static_cast<uint32_t>(rng.below(n));
      } else if (rng.unit() < spec.affinity) {
        const double t = rng.unit() * taste[nc - 1];
        const auto it = std::upper_bound(taste.begin(), taste.end(), t);
        const size_t pos =
            std::min<size_t>(it - taste.begin(), static_cast<size_t>(nc) - 1);
        item = pool[pos].draw(rng);
      } else {
        item = global.draw(rng);
      }
      picked.insert(item);
    }
    for (uint32_t i : picked) entries.push_back({u, i});
  }

  // Items the sampler never reached get one interaction each so downstream
  // degree contracts hold.
  std::vector<uint32_t> item_deg(n, 0);
  for (const Entry& e : entries) ++item_deg[e.item];
  for (uint32_t i = 0; i < n; ++i) {
    if (item_deg[i] > 0) continue;
    const uint32_t u = static_cast<uint32_t>(rng.below(m));
    entries.push_back({u, i});
  }

  return InteractionMatrix::from_entries(m, n, std::move(entries));
}

}  // namespace lare
