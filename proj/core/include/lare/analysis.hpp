#pragma once

#include <optional>
#include <span>

#include "lare/interactions.hpp"
#include "lare/linalg.hpp"
#include "lare/models.hpp"

namespace lare {

// Mean absolute degree difference over all pairs, scaled to [0, 1).
// 0 = perfectly even popularity, 1 = all mass on one item.
double gini_from_degrees(std::span<const uint32_t> degrees);
double item_gini(const InteractionMatrix& x);

struct HomophilyConfig {
  // Overlap emphasis: pair weight is overlap^(delta+1) / min degree.
  double delta = 1.5;
  // When set, H is estimated over this many co-engagement pairs sampled
  // without replacement; full enumeration otherwise.
  std::optional<uint64_t> sample_pairs;
  uint64_t seed = 0;
};

// Overlap-weighted mean Jaccard similarity across item pairs that share at
// least one user. High values mean co-engaged items look alike, which is the
// structure neighborhood-style weights can exploit.
double weighted_homophily(const InteractionMatrix& x,
                          const HomophilyConfig& cfg = {});

struct DatasetStats {
  uint32_t users = 0;
  uint32_t items = 0;
  uint64_t interactions = 0;
  double density = 0.0;
  double gini = 0.0;
  double homophily = 0.0;
};

DatasetStats dataset_stats(const InteractionMatrix& x,
                           const HomophilyConfig& cfg = {});

// Spectrum of the (symmetrized) ridge weight matrix on the half-split gram
// for each user strength beta. Under the half split the spectra are invariant
// to the item split, so beta is the only knob that moves them.
std::vector<SpectrumReport> spectrum_vs_beta(const InteractionMatrix& x,
                                             std::span<const double> betas,
                                             double lambda,
                                             uint32_t eig_cap = 4096);

struct GroupSummary {
  double mean = 0.0;
  double stddev = 0.0;
  uint64_t count = 0;
  // Histogram over [hist_min, hist_max] with equal-width bins.
  double hist_min = 0.0, hist_max = 0.0;
  std::vector<uint64_t> histogram;
};

struct WeightDistribution {
  std::vector<double> column_mass;  // mean absolute off-diagonal weight into each item
  std::vector<uint8_t> is_head;     // per item, popularity-ranked top fraction
  GroupSummary head;
  GroupSummary tail;
};

// How much weight mass the model routes toward popular vs long-tail items.
// Items are ranked by train degree; the top head_fraction (at least one item,
// ties broken by index) form the head group.
WeightDistribution weight_distribution(const ItemModel& model,
                                       std::span<const uint32_t> item_degrees,
                                       double head_fraction = 0.2,
                                       uint32_t bins = 32);

// Ranks items by degree descending (index ascending on ties) and marks the
// top floor(fraction * n) of them, clamped to [1, n-1].
std::vector<uint8_t> head_mask(std::span<const uint32_t> item_degrees,
                               double fraction);

}  // namespace lare
