#include "lare/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "lare/error.hpp"
#include "lare/rng.hpp"

namespace lare {

double gini_from_degrees(std::span<const uint32_t> degrees) {
  const size_t n = degrees.size();
  if (n == 0) fail_usage("gini: empty degree vector");
  std::vector<uint32_t> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0, weighted = 0;
  for (size_t i = 0; i < n; ++i) {
    total += sorted[i];
    // Sorted ascending, sum_{i,j} |d_i - d_j| = sum_i (2i - n + 1) d_i.
    weighted += (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0) *
                static_cast<double>(sorted[i]);
  }
  if (total == 0) fail_usage("gini: all degrees are zero");
  return weighted / (static_cast<double>(n) * total);
}

double item_gini(const InteractionMatrix& x) {
  return gini_from_degrees(x.item_degrees());
}

double weighted_homophily(const InteractionMatrix& x,
                          const HomophilyConfig& cfg) {
  if (cfg.delta < 0) fail_usage("homophily delta must be non-negative");
  const uint64_t n = x.cols();

  // Overlap counts for every co-engaged item pair, keyed i * n + j with
  // i < j. Bounded by the number of distinct pairs, not by the per-user
  // quadratic walk that fills it.
  std::unordered_map<uint64_t, uint32_t> overlap;
  overlap.reserve(x.nnz() * 4);
  for (uint32_t u = 0; u < x.rows(); ++u) {
    auto row = x.items_of(u);
    for (size_t a = 0; a < row.size(); ++a)
      for (size_t b = a + 1; b < row.size(); ++b)
        ++overlap[static_cast<uint64_t>(row[a]) * n + row[b]];
  }
  if (overlap.empty()) return 0.0;

  // Hash order is not portable; a sorted key walk keeps the summation (and
  // any sampling) reproducible.
  std::vector<uint64_t> keys;
  keys.reserve(overlap.size());
  for (const auto& [k, v] : overlap) keys.push_back(k);
  std::sort(keys.begin(), keys.end());

  if (cfg.sample_pairs && *cfg.sample_pairs < keys.size()) {
    Rng rng(mix_seed(cfg.seed, 0x40B));
    auto picks = rng.sample_indices(keys.size(), *cfg.sample_pairs);
    std::vector<uint64_t> sampled;
    sampled.reserve(picks.size());
    for (uint64_t p : picks) sampled.push_back(keys[p]);
    keys = std::move(sampled);
  }

  const auto& ideg = x.item_degrees();
  double w_sum = 0, ws_sum = 0;
  for (uint64_t key : keys) {
    const uint32_t i = static_cast<uint32_t>(key / n);
    const uint32_t j = static_cast<uint32_t>(key % n);
    const double c = overlap.find(key)->second;
    const double di = ideg[i], dj = ideg[j];
    const double w = std::pow(c, cfg.delta) * c / std::min(di, dj);
    const double s = c / (di + dj - c);  // Jaccard on user sets
    w_sum += w;
    ws_sum += w * s;
  }
  return w_sum > 0 ? ws_sum / w_sum : 0.0;
}

DatasetStats dataset_stats(const InteractionMatrix& x,
                           const HomophilyConfig& cfg) {
  DatasetStats st;
  st.users = x.rows();
  st.items = x.cols();
  st.interactions = x.nnz();
  st.density = x.density();
  st.gini = item_gini(x);
  st.homophily = weighted_homophily(x, cfg);
  return st;
}

std::vector<SpectrumReport> spectrum_vs_beta(const InteractionMatrix& x,
                                             std::span<const double> betas,
                                             double lambda,
                                             uint32_t eig_cap) {
  check_dense_cap(x.cols(), eig_cap);
  if (!(lambda > 0)) fail_usage("spectrum_vs_beta: lambda must be positive");
  std::vector<SpectrumReport> out;
  out.reserve(betas.size());
  for (double beta : betas) {
    if (beta < 0 || beta > 1)
      fail_usage("spectrum_vs_beta: beta must lie in [0, 1]");
    DenseMatrix s = degree_power_gram(x, 0.5, 0.5, beta);
    DenseMatrix a = s;
    a.diagonal().array() += lambda;
    DenseMatrix b = -lambda * spd_inverse(a);
    b.diagonal().array() += 1.0;
    // b is symmetric up to solver round-off; fold it flat before eig.
    DenseMatrix bs = 0.5 * (b + b.transpose());
    char tag[96];
    std::snprintf(tag, sizeof tag, "weights[split=0.5 beta=%g lambda=%g]", beta,
                  lambda);
    out.push_back(eig_sym(bs, tag));
  }
  return out;
}

std::vector<uint8_t> head_mask(std::span<const uint32_t> item_degrees,
                               double fraction) {
  const size_t n = item_degrees.size();
  if (n < 2) fail_usage("head_mask: need at least two items");
  if (fraction <= 0 || fraction >= 1)
    fail_usage("head_mask: fraction must lie in (0, 1)");
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return item_degrees[a] > item_degrees[b];
  });
  size_t k = static_cast<size_t>(fraction * static_cast<double>(n));
  k = std::clamp<size_t>(k, 1, n - 1);
  std::vector<uint8_t> mask(n, 0);
  for (size_t r = 0; r < k; ++r) mask[order[r]] = 1;
  return mask;
}

namespace {

GroupSummary summarize(const std::vector<double>& values, uint32_t bins) {
  GroupSummary g;
  g.count = values.size();
  if (values.empty()) return g;
  double sum = 0;
  g.hist_min = values[0];
  g.hist_max = values[0];
  for (double v : values) {
    sum += v;
    g.hist_min = std::min(g.hist_min, v);
    g.hist_max = std::max(g.hist_max, v);
  }
  g.mean = sum / static_cast<double>(g.count);
  double ss = 0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.stddev = std::sqrt(ss / static_cast<double>(g.count));
  g.histogram.assign(bins, 0);
  const double width = g.hist_max - g.hist_min;
  for (double v : values) {
    size_t bin = width > 0 ? static_cast<size_t>((v - g.hist_min) / width *
                                                 static_cast<double>(bins))
                           : 0;
    if (bin >= bins) bin = bins - 1;
    ++g.histogram[bin];
  }
  return g;
}

}  // namespace

WeightDistribution weight_distribution(const ItemModel& model,
                                       std::span<const uint32_t> item_degrees,
                                       double head_fraction, uint32_t bins) {
  const uint32_t n = model.num_items;
  if (item_degrees.size() != n)
    fail_usage("weight_distribution: degree vector does not match model");
  if (bins == 0) fail_usage("weight_distribution: need at least one bin");

  WeightDistribution wd;
  wd.is_head = head_mask(item_degrees, head_fraction);
  wd.column_mass.resize(n);
  for (uint32_t j = 0; j < n; ++j) {
    double mass = model.b.col(j).cwiseAbs().sum() - std::abs(model.b(j, j));
    wd.column_mass[j] = n > 1 ? mass / static_cast<double>(n - 1) : 0.0;
  }
  std::vector<double> head_vals, tail_vals;
  for (uint32_t j = 0; j < n; ++j)
    (wd.is_head[j] ? head_vals : tail_vals).push_back(wd.column_mass[j]);
  wd.head = summarize(head_vals, bins);
  wd.tail = summarize(tail_vals, bins);
  return wd;
}

}  // namespace lare
