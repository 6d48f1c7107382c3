#include <doctest.h>

#include <cmath>

#include "lare/analysis.hpp"
#include "lare/error.hpp"
#include "lare/rng.hpp"

using namespace lare;

namespace {

InteractionMatrix random_matrix(uint32_t m, uint32_t n, double density,
                                uint64_t seed, uint32_t min_user_degree = 1) {
  Rng rng(seed);
  std::vector<Entry> entries;
  for (uint32_t u = 0; u < m; ++u)
    for (uint32_t i = 0; i < n; ++i)
      if (rng.unit() < density) entries.push_back({u, i});
  for (uint32_t u = 0; u < m; ++u)
    for (uint32_t k = 0; k < min_user_degree; ++k)
      entries.push_back({u, static_cast<uint32_t>((u + k) % n)});
  for (uint32_t i = 0; i < n; ++i)
    entries.push_back({static_cast<uint32_t>(rng.below(m)), i});
  return InteractionMatrix::from_entries(m, n, std::move(entries));
}

}  // namespace

TEST_CASE("gini on hand-checked degree vectors") {
  // [1,3]: |1-3|*2 / (2*2*4) = 0.25
  CHECK(gini_from_degrees(std::vector<uint32_t>{1, 3}) ==
        doctest::Approx(0.25).epsilon(1e-15));
  CHECK(gini_from_degrees(std::vector<uint32_t>{5, 5, 5}) ==
        doctest::Approx(0.0).epsilon(1e-15));
  // All mass on one of n: (n-1)/n
  CHECK(gini_from_degrees(std::vector<uint32_t>{5, 0, 0, 0, 0}) ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(gini_from_degrees(std::vector<uint32_t>{}), Error);
  CHECK_THROWS_AS(gini_from_degrees(std::vector<uint32_t>{0, 0}), Error);
}

TEST_CASE("weighted homophily on hand-enumerated graphs") {
  SUBCASE("single co-engaged pair") {
    // V_0 = {u0}, V_1 = {u0, u1}: overlap 1, w = 1/min(1,2) = 1,
    // jaccard = 1/2 -> H = 0.5.
    auto x = InteractionMatrix::from_entries(2, 2, {{0, 0}, {0, 1}, {1, 1}});
    CHECK(weighted_homophily(x) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("three items with mixed overlaps") {
    // V_0 = V_1 = {u0,u1}, V_2 = {u1}:
    // (0,1): c=2, w=2^1.5, s=1; (0,2) and (1,2): c=1, w=1, s=0.5
    auto x = InteractionMatrix::from_entries(
        2, 3, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}});
    const double w01 = std::pow(2.0, 1.5);
    const double expected = (w01 * 1.0 + 0.5 + 0.5) / (w01 + 2.0);
    CHECK(weighted_homophily(x) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("no co-engagement at all") {
    auto x = InteractionMatrix::from_entries(2, 2, {{0, 0}, {1, 1}});
    CHECK(weighted_homophily(x) == 0.0);
  }
}

TEST_CASE("sampled homophily is deterministic and exact when saturated") {
  auto x = random_matrix(40, 20, 0.2, 71);
  const double full = weighted_homophily(x);
  HomophilyConfig cfg;
  cfg.sample_pairs = 1u << 20;  // larger than the pair population
  CHECK(weighted_homophily(x, cfg) == full);
  cfg.sample_pairs = 50;
  cfg.seed = 3;
  const double a = weighted_homophily(x, cfg);
  CHECK(a == weighted_homophily(x, cfg));
  CHECK(a > 0.0);
}

TEST_CASE("dataset stats compose the pieces") {
  auto x = InteractionMatrix::from_entries(2, 2, {{0, 0}, {0, 1}, {1, 1}});
  auto st = dataset_stats(x);
  CHECK(st.users == 2);
  CHECK(st.items == 2);
  CHECK(st.interactions == 3);
  CHECK(st.density == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(st.gini == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(st.homophily == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("weight spectra move down as user strength grows") {
  // Needs every user degree >= 2 for strict movement.
  auto x = random_matrix(36, 12, 0.3, 73, 2);
  REQUIRE(x.min_user_degree() >= 2);
  std::vector<double> betas = {0.0, 0.5, 1.0};
  auto specs = spectrum_vs_beta(x, betas, 0.5);
  REQUIRE(specs.size() == 3);
  for (const auto& s : specs) {
    CHECK(s.eigenvalues.front() < 1.0);
    CHECK(s.eigenvalues.back() > -1e-10);
    CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
  }
  for (size_t b = 1; b < specs.size(); ++b)
    for (size_t i = 0; i < specs[b].eigenvalues.size(); ++i)
      CHECK(specs[b].eigenvalues[i] < specs[b - 1].eigenvalues[i]);
  CHECK(specs[0].source.find("beta=0") != std::string::npos);
}

TEST_CASE("spectrum shrinkage follows the ridge transform of gram spectra") {
  auto x = random_matrix(30, 10, 0.3, 79);
  const double lambda = 0.8;
  DenseMatrix s = degree_power_gram(x, 0.5, 0.5, 0.6);
  auto gram_spec = eig_sym(s, "gram");
  auto weight_spec = spectrum_vs_beta(x, std::vector<double>{0.6}, lambda)[0];
  for (size_t i = 0; i < gram_spec.eigenvalues.size(); ++i) {
    const double mu = gram_spec.eigenvalues[i];
    CHECK(weight_spec.eigenvalues[i] ==
          doctest::Approx(mu / (mu + lambda)).epsilon(1e-8));
  }
}

TEST_CASE("head mask ranks by degree with index ties") {
  std::vector<uint32_t> deg = {5, 1, 4, 4};
  auto mask = head_mask(deg, 0.5);
  CHECK(mask == std::vector<uint8_t>{1, 0, 1, 0});
  // Fraction under one item clamps to a single head item.
  auto tiny_head = head_mask(deg, 0.01);
  CHECK(tiny_head == std::vector<uint8_t>{1, 0, 0, 0});
  CHECK_THROWS_AS(head_mask(deg, 0.0), Error);
  CHECK_THROWS_AS(head_mask(std::vector<uint32_t>{3}, 0.5), Error);
}

TEST_CASE("weight distribution summarizes head and tail mass") {
  ItemModel model;
  model.num_items = 3;
  model.b.resize(3, 3);
  model.b << 0, 1, -2, 3, 0, 4, -5, 6, 0;
  std::vector<uint32_t> deg = {9, 2, 1};
  auto wd = weight_distribution(model, deg, 0.4, 4);
  // Column mass = mean |off-diagonal| per column.
  CHECK(wd.column_mass[0] == doctest::Approx(4.0).epsilon(1e-15));   // (3+5)/2
  CHECK(wd.column_mass[1] == doctest::Approx(3.5).epsilon(1e-15));   // (1+6)/2
  CHECK(wd.column_mass[2] == doctest::Approx(3.0).epsilon(1e-15));   // (2+4)/2
  CHECK(wd.is_head == std::vector<uint8_t>{1, 0, 0});
  CHECK(wd.head.count == 1);
  CHECK(wd.tail.count == 2);
  CHECK(wd.head.mean == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(wd.tail.mean == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(wd.tail.histogram.size() == 4);
  uint64_t total = 0;
  for (uint64_t c : wd.tail.histogram) total += c;
  CHECK(total == 2);
}
