#pragma once

#include <functional>
#include <span>
#include <string>

#include "lare/interactions.hpp"
#include "lare/models.hpp"

namespace lare {

// Report slices:
//   AOA       every held-out item counts equally
//   Head      ground truth restricted to popular items (top fraction by
//             train degree); Tail is the complement
//   Unbiased  inverse-propensity weighting of held-out items, weights
//             (d_i / d_max)^{-(gamma+1)/2}, self-normalized per user so it
//             reduces to AOA when popularity is uniform
//   Active    users with the largest fold-in histories (top fraction);
//             Inactive is the complement
enum class Slice { AOA, Head, Tail, Unbiased, Active, Inactive };

const char* to_string(Slice s);

struct EvalConfig {
  std::vector<uint32_t> k_list = {20};
  double head_fraction = 0.2;
  double active_fraction = 0.2;
  double propensity_gamma = 2.0;
  bool mask_seen = true;
};

struct EvalRow {
  Slice slice;
  std::string metric;  // "recall" | "ndcg"
  uint32_t k = 0;
  double value = 0.0;
  uint64_t n_users = 0;  // users contributing to the mean
};

struct EvalReport {
  std::vector<EvalRow> rows;  // slice-major, metric, then k ascending
  double get(Slice slice, const std::string& metric, uint32_t k) const;
};

// Indices of the k largest finite scores, descending, ties broken by
// ascending index. Mask-sentinel entries never rank.
std::vector<uint32_t> rank_topk(std::span<const double> scores, uint32_t k);

// Recall truncated at min(k, |truth|); gains 1 / log2(rank + 1) for both.
// truth must be sorted ascending.
double recall_at_k(std::span<const uint32_t> topk,
                   std::span<const uint32_t> truth, uint32_t k);
double ndcg_at_k(std::span<const uint32_t> topk,
                 std::span<const uint32_t> truth, uint32_t k);

// Per-user scores over the full item space; used to plug alternative rankers
// (popularity baselines) into the same evaluation loop.
using Scorer =
    std::function<std::vector<double>(std::span<const uint32_t> foldin)>;

EvalReport evaluate_scorer(const Scorer& scorer, const EvalSplit& split,
                           std::span<const uint32_t> train_item_degrees,
                           const EvalConfig& cfg = {});

EvalReport evaluate(const ItemModel& model, const EvalSplit& split,
                    std::span<const uint32_t> train_item_degrees,
                    const EvalConfig& cfg = {});

// Degree-proportional baseline: every user gets the same popularity ranking,
// minus anything they already interacted with.
EvalReport evaluate_most_popular(const EvalSplit& split,
                                 std::span<const uint32_t> train_item_degrees,
                                 const EvalConfig& cfg = {});

// Report rows as "slice metric k value n_users" TSV, fixed float format so
// identical runs are byte-identical.
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace lare
