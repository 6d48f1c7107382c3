#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lare/error.hpp"
#include "lare/evaluation.hpp"

using namespace lare;
namespace fs = std::filesystem;

namespace {

// Three users over six items with scores rigged so the top-2 lists are
// {1,2}, {0,5}, {5,4}. Degrees [5,4,3,2,2,1] put items {0,1} in the head at
// fraction 1/3. Every expected value below is derived by hand from the
// metric definitions.
struct Fixture {
  EvalSplit split;
  std::vector<uint32_t> degrees = {5, 4, 3, 2, 2, 1};
  EvalConfig cfg;

  Fixture() {
    split.users = {0, 1, 2};
    split.foldin = {{0, 3}, {1}, {0, 1, 2}};
    split.heldout = {{1, 4}, {5}, {3, 4}};
    cfg.k_list = {2};
    cfg.head_fraction = 1.0 / 3;
    cfg.active_fraction = 1.0 / 3;
    cfg.propensity_gamma = 2.0;
  }

  Scorer scorer() const {
    return [](std::span<const uint32_t> foldin) -> std::vector<double> {
      const double S = kMaskSentinel;
      switch (foldin.size()) {
        case 2: return {S, 9, 8, S, 7, 1};
        case 1: return {5, S, 1, 2, 3, 4};
        default: return {S, S, S, 1, 2, 3};
      }
    };
  }
};

}  // namespace

TEST_CASE("rank_topk orders by score then index and drops sentinels") {
  std::vector<double> s = {0.5, 2, 2, -1};
  CHECK(rank_topk(s, 3) == std::vector<uint32_t>{1, 2, 0});
  CHECK(rank_topk(s, 10) == std::vector<uint32_t>{1, 2, 0, 3});
  std::vector<double> masked = {kMaskSentinel, 2, 2, kMaskSentinel};
  CHECK(rank_topk(masked, 3) == std::vector<uint32_t>{1, 2});
  std::vector<double> all_masked = {kMaskSentinel, kMaskSentinel};
  CHECK(rank_topk(all_masked, 2).empty());
}

TEST_CASE("recall truncates its denominator at k") {
  std::vector<uint32_t> topk = {1, 2, 0};
  std::vector<uint32_t> truth = {2, 5};
  CHECK(recall_at_k(topk, truth, 3) == doctest::Approx(0.5).epsilon(1e-15));
  // Denominator min(k=1, |truth|=2) = 1; top-1 = {1} misses.
  CHECK(recall_at_k(topk, truth, 1) == 0.0);
  std::vector<uint32_t> single = {5};
  CHECK(recall_at_k(std::vector<uint32_t>{5, 1}, single, 2) == 1.0);
}

TEST_CASE("ndcg uses log2 position discounts") {
  const double l3 = 1.0 / std::log2(3.0);
  std::vector<uint32_t> truth = {4};
  CHECK(ndcg_at_k(std::vector<uint32_t>{4, 0}, truth, 2) == 1.0);
  CHECK(ndcg_at_k(std::vector<uint32_t>{0, 4}, truth, 2) ==
        doctest::Approx(l3).epsilon(1e-15));
  CHECK(ndcg_at_k(std::vector<uint32_t>{0, 1}, truth, 2) == 0.0);
}

TEST_CASE("slice means on the hand-enumerated fixture") {
  Fixture fx;
  auto report = evaluate_scorer(fx.scorer(), fx.split, fx.degrees, fx.cfg);

  const double l3 = 1.0 / std::log2(3.0);
  const double w1 = std::pow(4.0 / 5.0, -1.5);
  const double w4 = std::pow(2.0 / 5.0, -1.5);

  auto val = [&](Slice s, const char* m) { return report.get(s, m, 2); };

  CHECK(val(Slice::AOA, "recall") == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(val(Slice::AOA, "ndcg") ==
        doctest::Approx((1 / (1 + l3) + l3 + l3 / (1 + l3)) / 3).epsilon(1e-14));
  CHECK(val(Slice::Head, "recall") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(val(Slice::Head, "ndcg") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(val(Slice::Tail, "recall") == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(val(Slice::Tail, "ndcg") ==
        doctest::Approx((0 + l3 + l3 / (1 + l3)) / 3).epsilon(1e-14));
  CHECK(val(Slice::Unbiased, "recall") ==
        doctest::Approx((w1 / (w1 + w4) + 1 + 0.5) / 3).epsilon(1e-14));
  CHECK(val(Slice::Unbiased, "ndcg") ==
        doctest::Approx((w1 / (w4 + w1 * l3) + l3 + l3 / (1 + l3)) / 3)
            .epsilon(1e-14));
  CHECK(val(Slice::Active, "recall") == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(val(Slice::Active, "ndcg") ==
        doctest::Approx(l3 / (1 + l3)).epsilon(1e-14));
  CHECK(val(Slice::Inactive, "recall") ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK(val(Slice::Inactive, "ndcg") ==
        doctest::Approx((1 / (1 + l3) + l3) / 2).epsilon(1e-14));

  // Contribution counts: the head slice only sees u0; activity splits 1/2.
  for (const auto& row : report.rows) {
    if (row.slice == Slice::Head) CHECK(row.n_users == 1);
    if (row.slice == Slice::AOA) CHECK(row.n_users == 3);
    if (row.slice == Slice::Active) CHECK(row.n_users == 1);
    if (row.slice == Slice::Inactive) CHECK(row.n_users == 2);
  }
}

TEST_CASE("propensity weighting reduces to plain metrics under uniform popularity") {
  Fixture fx;
  fx.degrees = {3, 3, 3, 3, 3, 3};
  auto report = evaluate_scorer(fx.scorer(), fx.split, fx.degrees, fx.cfg);
  for (const char* metric : {"recall", "ndcg"})
    CHECK(report.get(Slice::Unbiased, metric, 2) ==
          report.get(Slice::AOA, metric, 2));
}

TEST_CASE("popularity baseline ranks by degree") {
  Fixture fx;
  EvalSplit one;
  one.users = {0};
  one.foldin = {{0}};
  one.heldout = {{1, 2}};
  auto report = evaluate_most_popular(one, fx.degrees, fx.cfg);
  // Top-2 after masking item 0: items 1 and 2 -> perfect hits.
  CHECK(report.get(Slice::AOA, "recall", 2) == 1.0);
  CHECK(report.get(Slice::AOA, "ndcg", 2) == 1.0);
}

TEST_CASE("multiple cutoffs come back sorted and deduplicated") {
  Fixture fx;
  fx.cfg.k_list = {4, 2, 2};
  auto report = evaluate_scorer(fx.scorer(), fx.split, fx.degrees, fx.cfg);
  std::vector<uint32_t> ks;
  for (const auto& row : report.rows)
    if (row.slice == Slice::AOA && row.metric == "recall") ks.push_back(row.k);
  CHECK(ks == std::vector<uint32_t>{2, 4});
  CHECK_THROWS_AS(
      evaluate_scorer(fx.scorer(), fx.split, fx.degrees,
                      []() {
                        EvalConfig c;
                        c.k_list = {};
                        return c;
                      }()),
      Error);
}

TEST_CASE("reports round-trip and rewrite byte-identically") {
  Fixture fx;
  auto report = evaluate_scorer(fx.scorer(), fx.split, fx.degrees, fx.cfg);
  auto path = fs::temp_directory_path() / "lare_test_report.tsv";
  write_report(path, report);
  auto loaded = read_report(path);
  REQUIRE(loaded.rows.size() == report.rows.size());
  for (size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(loaded.rows[i].slice == report.rows[i].slice);
    CHECK(loaded.rows[i].metric == report.rows[i].metric);
    CHECK(loaded.rows[i].k == report.rows[i].k);
    CHECK(loaded.rows[i].n_users == report.rows[i].n_users);
    CHECK(loaded.rows[i].value ==
          doctest::Approx(report.rows[i].value).epsilon(1e-11));
  }
  std::stringstream first;
  first << std::ifstream(path).rdbuf();
  write_report(path, report);
  std::stringstream second;
  second << std::ifstream(path).rdbuf();
  CHECK(first.str() == second.str());
  fs::remove(path);
}

TEST_CASE("evaluate rejects inconsistent inputs") {
  Fixture fx;
  EvalSplit empty;
  CHECK_THROWS_AS(evaluate_scorer(fx.scorer(), empty, fx.degrees, fx.cfg),
                  Error);
  Scorer short_scorer = [](std::span<const uint32_t>) {
    return std::vector<double>{1.0};
  };
  CHECK_THROWS_AS(evaluate_scorer(short_scorer, fx.split, fx.degrees, fx.cfg),
                  Error);
  auto bad = fx.split;
  bad.heldout[0] = {99};
  CHECK_THROWS_AS(evaluate_scorer(fx.scorer(), bad, fx.degrees, fx.cfg), Error);
}
