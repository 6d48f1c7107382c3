#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lare/error.hpp"
#include "lare/normalization.hpp"
#include "lare/rng.hpp"

using namespace lare;

namespace {

InteractionMatrix tiny() {
  // X = [[1,1],[0,1]]: user degrees (2,1), item degrees (1,2)
  return InteractionMatrix::from_entries(2, 2, {{0, 0}, {0, 1}, {1, 1}});
}

InteractionMatrix random_matrix(uint32_t m, uint32_t n, double density,
                                uint64_t seed) {
  Rng rng(seed);
  std::vector<Entry> entries;
  for (uint32_t u = 0; u < m; ++u)
    for (uint32_t i = 0; i < n; ++i)
      if (rng.unit() < density) entries.push_back({u, i});
  for (uint32_t u = 0; u < m; ++u)
    entries.push_back({u, static_cast<uint32_t>(rng.below(n))});
  for (uint32_t i = 0; i < n; ++i)
    entries.push_back({static_cast<uint32_t>(rng.below(m)), i});
  return InteractionMatrix::from_entries(m, n, std::move(entries));
}

// Entry-level reference: P_ij = sum_u X_ui X_uj d_u^-user / (d_i^src d_j^tgt).
// Independent of the production path, which scales a shared gram.
DenseMatrix reference_gram(const InteractionMatrix& x, double src, double tgt,
                           double user) {
  const uint32_t n = x.cols();
  DenseMatrix p = DenseMatrix::Zero(n, n);
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < n; ++j) {
      double acc = 0;
      for (uint32_t u = 0; u < x.rows(); ++u)
        if (x.has(u, i) && x.has(u, j))
          acc += std::pow(static_cast<double>(x.user_degrees()[u]), -user);
      p(i, j) = acc /
                (std::pow(static_cast<double>(x.item_degrees()[i]), src) *
                 std::pow(static_cast<double>(x.item_degrees()[j]), tgt));
    }
  return p;
}

}  // namespace

TEST_CASE("random-walk normalization matches hand values") {
  // D_U^{-1} weighting: M = [[0.5,0.5],[0.5,1.5]]; left D_I^{-1} scaling
  // gives [[0.5,0.5],[0.25,0.75]].
  auto g = build_gram(tiny(), NormRecipe::rw());
  CHECK(g.p(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.p(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.p(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.p(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("symmetric normalization matches hand values") {
  // D_I^{-1/2} M D_I^{-1/2} = [[0.5, 0.5/sqrt(2)],[0.5/sqrt(2), 0.75]]
  auto g = build_gram(tiny(), NormRecipe::sym());
  const double off = 0.5 / std::sqrt(2.0);
  CHECK(g.p(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.p(0, 1) == doctest::Approx(off).epsilon(1e-14));
  CHECK(g.p(1, 0) == doctest::Approx(off).epsilon(1e-14));
  CHECK(g.p(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("degree split endpoints collapse onto rw and sym") {
  auto x = random_matrix(40, 18, 0.25, 23);
  DenseMatrix rw = build_gram(x, NormRecipe::rw()).p;
  DenseMatrix dan01 = build_gram(x, NormRecipe::dan(0.0, 1.0)).p;
  CHECK((rw - dan01).cwiseAbs().maxCoeff() <= 1e-12);

  DenseMatrix sym = build_gram(x, NormRecipe::sym()).p;
  DenseMatrix dan_half = build_gram(x, NormRecipe::dan(0.5, 1.0)).p;
  CHECK((sym - dan_half).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("general split matches the entry-level reference") {
  auto x = random_matrix(25, 12, 0.3, 29);
  SUBCASE("dan") {
    DenseMatrix got = build_gram(x, NormRecipe::dan(0.3, 0.7)).p;
    DenseMatrix ref = reference_gram(x, 0.7, 0.3, 0.7);
    CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("user only") {
    DenseMatrix got = build_gram(x, NormRecipe::user_only(0.4)).p;
    DenseMatrix ref = reference_gram(x, 0, 0, 0.4);
    CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("item only") {
    DenseMatrix got = build_gram(x, NormRecipe::item_only(0.2)).p;
    DenseMatrix ref = reference_gram(x, 0.8, 0.2, 0);
    CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("colwise and none return the raw gram") {
    DenseMatrix raw = gram(x);
    CHECK((build_gram(x, NormRecipe::none()).p - raw).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((build_gram(x, NormRecipe::column_wise(0.5)).p - raw)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("tiny dan entries match the per-entry formula") {
  // d_u = (2,1), d_i = (1,2), alpha=0.3, beta=0.7:
  // P_00 = 2^-0.7; P_01 = 2^-0.7 / 2^0.3; P_10 = 2^-0.7 / 2^0.7;
  // P_11 = (2^-0.7 + 1) / 2.
  auto g = build_gram(tiny(), NormRecipe::dan(0.3, 0.7));
  const double c = std::pow(2.0, -0.7);
  CHECK(g.p(0, 0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(g.p(0, 1) == doctest::Approx(c / std::pow(2.0, 0.3)).epsilon(1e-14));
  CHECK(g.p(1, 0) == doctest::Approx(c / std::pow(2.0, 0.7)).epsilon(1e-14));
  CHECK(g.p(1, 1) == doctest::Approx((c + 1.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("half-split grams stay bitwise symmetric") {
  auto x = random_matrix(35, 16, 0.25, 31);
  for (double beta : {0.0, 0.4, 1.0}) {
    DenseMatrix p = build_gram(x, NormRecipe::dan(0.5, beta)).p;
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < i; ++j) {
        double a = p(i, j), b = p(j, i);
        CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
      }
  }
}

TEST_CASE("recipes validate their parameter ranges") {
  CHECK_THROWS_AS(build_gram(tiny(), NormRecipe::dan(1.2, 0.5)), Error);
  CHECK_THROWS_AS(build_gram(tiny(), NormRecipe::dan(0.5, -0.1)), Error);
  NormRecipe stray = NormRecipe::sym();
  stray.alpha = 0.3;
  CHECK_THROWS_AS(stray.validate(), Error);
  NormRecipe neg = NormRecipe::column_wise(-1.0);
  CHECK_THROWS_AS(neg.validate(), Error);
  CHECK_THROWS_AS(norm_kind_from_string("bogus"), Error);
  CHECK(norm_kind_from_string("dan") == NormKind::DAN);
}

TEST_CASE("zero degrees are contract violations") {
  // Item 2 has no interactions.
  auto x = InteractionMatrix::from_entries(2, 3, {{0, 0}, {0, 1}, {1, 1}});
  CHECK_THROWS_AS(build_gram(x, NormRecipe::sym()), Error);
  // User 1 untouched, user scaling must fail; pure item scaling succeeds.
  auto y = InteractionMatrix::from_entries(2, 2, {{0, 0}, {0, 1}});
  CHECK_THROWS_AS(build_gram(y, NormRecipe::user_only(0.5)), Error);
  CHECK_NOTHROW(build_gram(y, NormRecipe::item_only(0.5)));
}

TEST_CASE("recipe labels are self-describing") {
  CHECK(NormRecipe::dan(0.2, 0.6).label() == "dan(alpha=0.2,beta=0.6)");
  CHECK(NormRecipe::none().label() == "none");
  CHECK(NormRecipe::rw().label() == "rw");
  CHECK(NormRecipe::column_wise(0.5).label() == "colwise(gamma=0.5)");
}
