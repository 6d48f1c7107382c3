#pragma once

#include "lare/interactions.hpp"

namespace lare {

// Implicit-feedback generator with the three regularities real catalogs
// show: a long-tailed item popularity curve, mixed-membership taste clusters
// (each user blends a few niches, so co-engaged items are alike but the
// structure stays diffuse), and an idiosyncratic noise floor. Popularity skew
// drives the head/tail gap, taste sharpness drives neighborhood quality, and
// the noise floor keeps near-zero ridge strengths from looking optimal.
struct SynthSpec {
  uint32_t users = 943;
  uint32_t items = 1682;
  uint64_t events = 100000;  // target; result has >= users + items cells
  uint32_t clusters = 12;
  // Popularity weight of the item with global rank r is (r + shift)^-skew.
  double popularity_skew = 1.3;
  double popularity_shift = 6.0;
  // Probability that a draw follows the user's taste profile instead of the
  // global popularity curve.
  double affinity = 0.8;
  // Probability that a draw ignores both taste and popularity and lands
  // uniformly at random.
  double noise_fraction = 0.05;
  // Cluster draws weight an item by the product of a niche prominence curve,
  // (local rank + 2)^-local_skew under a per-pool shuffled order, and the
  // global curve compressed to weight^local_coupling. Low coupling lets
  // globally obscure items lead their niche; coupling 1 with local_skew 0
  // makes pools mirror the global curve exactly.
  double local_skew = 0.5;
  double local_coupling = 0.6;
  // Per-user pool affinities are exp(sharpness * gauss), normalized. High
  // sharpness pins a user to one or two pools; zero mixes all pools evenly.
  double taste_sharpness = 1.5;
  // Per-user degree is min_degree + floor(lognormal(log_mean, log_sigma)),
  // rescaled so the expected total matches events.
  uint32_t min_degree = 16;
  double log_sigma = 1.05;
  uint64_t seed = 7;
};

InteractionMatrix synthesize(const SynthSpec& spec);

}  // namespace lare
