#include "lare/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string_view>

#include "lare/analysis.hpp"
#include "lare/error.hpp"

namespace lare {

const char* to_string(Slice s) {
  switch (s) {
    case Slice::AOA: return "aoa";
    case Slice::Head: return "head";
    case Slice::Tail: return "tail";
    case Slice::Unbiased: return "unbiased";
    case Slice::Active: return "active";
    case Slice::Inactive: return "inactive";
  }
  return "?";
}

double EvalReport::get(Slice slice, const std::string& metric,
                       uint32_t k) const {
  for (const EvalRow& r : rows)
    if (r.slice == slice && r.metric == metric && r.k == k) return r.value;
  fail_usage("report has no row " + std::string(to_string(slice)) + "/" +
             metric + "@" + std::to_string(k));
}

std::vector<uint32_t> rank_topk(std::span<const double> scores, uint32_t k) {
  std::vector<uint32_t> idx;
  idx.reserve(scores.size());
  for (uint32_t i = 0; i < scores.size(); ++i)
    if (scores[i] != kMaskSentinel) idx.push_back(i);
  const size_t take = std::min<size_t>(k, idx.size());
  auto better = [&](uint32_t a, uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), better);
  idx.resize(take);
  return idx;
}

namespace {

bool contains(std::span<const uint32_t> sorted, uint32_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

double ideal_dcg(size_t hits_possible) {
  double s = 0;
  for (size_t r = 1; r <= hits_possible; ++r)
    s += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return s;
}

}  // namespace

double recall_at_k(std::span<const uint32_t> topk,
                   std::span<const uint32_t> truth, uint32_t k) {
  if (truth.empty()) fail_usage("recall: empty ground truth");
  size_t hits = 0;
  for (size_t r = 0; r < std::min<size_t>(topk.size(), k); ++r)
    if (contains(truth, topk[r])) ++hits;
  return static_cast<double>(hits) /
         static_cast<double>(std::min<size_t>(k, truth.size()));
}

double ndcg_at_k(std::span<const uint32_t> topk,
                 std::span<const uint32_t> truth, uint32_t k) {
  if (truth.empty()) fail_usage("ndcg: empty ground truth");
  double dcg = 0;
  for (size_t r = 0; r < std::min<size_t>(topk.size(), k); ++r)
    if (contains(truth, topk[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / ideal_dcg(std::min<size_t>(k, truth.size()));
}

namespace {

struct Accum {
  double recall = 0, ndcg = 0;
  uint64_t users = 0;
};

struct WeightedMetrics {
  double recall = 0, ndcg = 0;
};

// Propensity-weighted recall/ndcg: held-out gains are the inverse estimated
// exposure, and the normalizers use the largest weights the user could have
// collected, so uniform popularity collapses to the unweighted metrics.
WeightedMetrics weighted_at_k(std::span<const uint32_t> topk,
                              std::span<const uint32_t> truth,
                              std::span<const double> item_weight, uint32_t k) {
  double wdcg = 0, whits = 0;
  for (size_t r = 0; r < std::min<size_t>(topk.size(), k); ++r)
    if (contains(truth, topk[r])) {
      whits += item_weight[topk[r]];
      wdcg += item_weight[topk[r]] / std::log2(static_cast<double>(r) + 2.0);
    }
  std::vector<double> tw;
  tw.reserve(truth.size());
  for (uint32_t i : truth) tw.push_back(item_weight[i]);
  std::sort(tw.begin(), tw.end(), std::greater<>());
  const size_t cap = std::min<size_t>(k, tw.size());
  double wideal_recall = 0, wideal_dcg = 0;
  for (size_t r = 0; r < cap; ++r) {
    wideal_recall += tw[r];
    wideal_dcg += tw[r] / std::log2(static_cast<double>(r) + 2.0);
  }
  WeightedMetrics m;
  m.recall = wideal_recall > 0 ? whits / wideal_recall : 0.0;
  m.ndcg = wideal_dcg > 0 ? wdcg / wideal_dcg : 0.0;
  return m;
}

}  // namespace

EvalReport evaluate_scorer(const Scorer& scorer, const EvalSplit& split,
                           std::span<const uint32_t> train_item_degrees,
                           const EvalConfig& cfg) {
  if (split.empty()) fail_usage("evaluate: empty split");
  const uint32_t n = static_cast<uint32_t>(train_item_degrees.size());
  std::vector<uint32_t> ks = cfg.k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.empty() || ks.front() == 0) fail_usage("evaluate: k list must be positive");
  const uint32_t k_max = ks.back();

  const auto head = head_mask(train_item_degrees, cfg.head_fraction);

  // Inverse propensity weights from train popularity.
  const double d_max = static_cast<double>(
      *std::max_element(train_item_degrees.begin(), train_item_degrees.end()));
  std::vector<double> ipw(n);
  for (uint32_t i = 0; i < n; ++i) {
    if (train_item_degrees[i] == 0)
      fail_usage("evaluate: item with zero train degree in eval space");
    ipw[i] = std::pow(static_cast<double>(train_item_degrees[i]) / d_max,
                      -(cfg.propensity_gamma + 1.0) / 2.0);
  }

  // Active users = top fraction by fold-in size, ties to the lower index.
  const size_t n_users = split.users.size();
  std::vector<uint32_t> by_activity(n_users);
  std::iota(by_activity.begin(), by_activity.end(), 0);
  std::stable_sort(by_activity.begin(), by_activity.end(),
                   [&](uint32_t a, uint32_t b) {
                     return split.foldin[a].size() > split.foldin[b].size();
                   });
  size_t n_active = std::clamp<size_t>(
      static_cast<size_t>(cfg.active_fraction * static_cast<double>(n_users)),
      1, n_users > 1 ? n_users - 1 : 1);
  std::vector<uint8_t> is_active(n_users, 0);
  for (size_t r = 0; r < n_active; ++r) is_active[by_activity[r]] = 1;

  constexpr size_t kSlices = 6;
  std::vector<std::array<Accum, kSlices>> acc(ks.size());

  std::vector<uint32_t> head_truth, tail_truth;
  for (size_t uidx = 0; uidx < n_users; ++uidx) {
    const auto& foldin = split.foldin[uidx];
    const auto& truth = split.heldout[uidx];
    std::vector<double> scores = scorer(foldin);
    if (scores.size() != n)
      fail_usage("evaluate: scorer returned wrong item count");
    const auto top = rank_topk(scores, k_max);

    head_truth.clear();
    tail_truth.clear();
    for (uint32_t i : truth) {
      if (i >= n) fail_usage("evaluate: held-out item out of range");
      (head[i] ? head_truth : tail_truth).push_back(i);
    }

    for (size_t ki = 0; ki < ks.size(); ++ki) {
      const uint32_t k = ks[ki];
      auto& slot = acc[ki];
      const double r_all = recall_at_k(top, truth, k);
      const double n_all = ndcg_at_k(top, truth, k);
      slot[0].recall += r_all;
      slot[0].ndcg += n_all;
      ++slot[0].users;
      if (!head_truth.empty()) {
        slot[1].recall += recall_at_k(top, head_truth, k);
        slot[1].ndcg += ndcg_at_k(top, head_truth, k);
        ++slot[1].users;
      }
      if (!tail_truth.empty()) {
        slot[2].recall += recall_at_k(top, tail_truth, k);
        slot[2].ndcg += ndcg_at_k(top, tail_truth, k);
        ++slot[2].users;
      }
      const auto w = weighted_at_k(top, truth, ipw, k);
      slot[3].recall += w.recall;
      slot[3].ndcg += w.ndcg;
      ++slot[3].users;
      const size_t g = is_active[uidx] ? 4 : 5;
      slot[g].recall += r_all;
      slot[g].ndcg += n_all;
      ++slot[g].users;
    }
  }

  static constexpr Slice kOrder[kSlices] = {Slice::AOA,      Slice::Head,
                                            Slice::Tail,     Slice::Unbiased,
                                            Slice::Active,   Slice::Inactive};
  EvalReport report;
  for (size_t s = 0; s < kSlices; ++s)
    for (const char* metric : {"recall", "ndcg"})
      for (size_t ki = 0; ki < ks.size(); ++ki) {
        const Accum& a = acc[ki][s];
        EvalRow row;
        row.slice = kOrder[s];
        row.metric = metric;
        row.k = ks[ki];
        const double sum = std::string_view(metric) == "recall" ? a.recall : a.ndcg;
        row.value = a.users > 0 ? sum / static_cast<double>(a.users) : 0.0;
        row.n_users = a.users;
        report.rows.push_back(row);
      }
  return report;
}

EvalReport evaluate(const ItemModel& model, const EvalSplit& split,
                    std::span<const uint32_t> train_item_degrees,
                    const EvalConfig& cfg) {
  if (model.num_items != train_item_degrees.size())
    fail_usage("evaluate: model item count does not match degree vector");
  Scorer scorer = [&](std::span<const uint32_t> foldin) {
    return score(model, foldin, cfg.mask_seen);
  };
  return evaluate_scorer(scorer, split, train_item_degrees, cfg);
}

EvalReport evaluate_most_popular(const EvalSplit& split,
                                 std::span<const uint32_t> train_item_degrees,
                                 const EvalConfig& cfg) {
  const uint32_t n = static_cast<uint32_t>(train_item_degrees.size());
  Scorer scorer = [&](std::span<const uint32_t> foldin) {
    std::vector<double> s(n);
    for (uint32_t i = 0; i < n; ++i)
      s[i] = static_cast<double>(train_item_degrees[i]);
    if (cfg.mask_seen)
      for (uint32_t i : foldin) s[i] = kMaskSentinel;
    return s;
  };
  return evaluate_scorer(scorer, split, train_item_degrees, cfg);
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) fail_io("cannot write report: " + path.string());
  out << "slice\tmetric\tk\tvalue\tn_users\n";
  char buf[64];
  for (const EvalRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.12g", r.value);
    out << to_string(r.slice) << '\t' << r.metric << '\t' << r.k << '\t' << buf
        << '\t' << r.n_users << '\n';
  }
  if (!out) fail_io("short write to report: " + path.string());
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open report: " + path.string());
  std::string header;
  if (!std::getline(in, header) || header != "slice\tmetric\tk\tvalue\tn_users")
    fail_io("bad report header: " + path.string());
  EvalReport report;
  std::string slice, metric;
  uint32_t k;
  double value;
  uint64_t n_users;
  while (in >> slice >> metric >> k >> value >> n_users) {
    EvalRow row;
    bool found = false;
    for (Slice s : {Slice::AOA, Slice::Head, Slice::Tail, Slice::Unbiased,
                    Slice::Active, Slice::Inactive})
      if (slice == to_string(s)) {
        row.slice = s;
        found = true;
      }
    if (!found) fail_io("unknown slice in report: " + slice);
    row.metric = metric;
    row.k = k;
    row.value = value;
    row.n_users = n_users;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace lare
