#include "lare/normalization.hpp"

#include <cmath>
#include <cstdio>

#include "lare/error.hpp"

namespace lare {

const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::None: return "none";
    case NormKind::RW: return "rw";
    case NormKind::Sym: return "sym";
    case NormKind::DAN: return "dan";
    case NormKind::UserOnly: return "user";
    case NormKind::ItemOnly: return "item";
    case NormKind::ColumnWise: return "colwise";
  }
  return "?";
}

NormKind norm_kind_from_string(const std::string& s) {
  if (s == "none") return NormKind::None;
  if (s == "rw") return NormKind::RW;
  if (s == "sym") return NormKind::Sym;
  if (s == "dan") return NormKind::DAN;
  if (s == "user") return NormKind::UserOnly;
  if (s == "item") return NormKind::ItemOnly;
  if (s == "colwise") return NormKind::ColumnWise;
  fail_usage("unknown normalization '" + s +
             "' (expected none|rw|sym|dan|user|item|colwise)");
}

void NormRecipe::validate() const {
  if (alpha < 0.0 || alpha > 1.0) fail_usage("recipe alpha must lie in [0, 1]");
  if (beta < 0.0 || beta > 1.0) fail_usage("recipe beta must lie in [0, 1]");
  if (gamma < 0.0) fail_usage("recipe gamma must be non-negative");
  if (kind != NormKind::DAN && kind != NormKind::ItemOnly && alpha != 0.0)
    fail_usage("recipe alpha is only meaningful for dan/item");
  if (kind != NormKind::DAN && kind != NormKind::UserOnly && beta != 0.0)
    fail_usage("recipe beta is only meaningful for dan/user");
  if (kind != NormKind::ColumnWise && gamma != 0.0)
    fail_usage("recipe gamma is only meaningful for colwise");
}

bool NormRecipe::scales_gram() const {
  return kind != NormKind::None && kind != NormKind::ColumnWise;
}

std::string NormRecipe::label() const {
  char buf[96];
  switch (kind) {
    case NormKind::DAN:
      std::snprintf(buf, sizeof buf, "dan(alpha=%g,beta=%g)", alpha, beta);
      return buf;
    case NormKind::UserOnly:
      std::snprintf(buf, sizeof buf, "user(beta=%g)", beta);
      return buf;
    case NormKind::ItemOnly:
      std::snprintf(buf, sizeof buf, "item(alpha=%g)", alpha);
      return buf;
    case NormKind::ColumnWise:
      std::snprintf(buf, sizeof buf, "colwise(gamma=%g)", gamma);
      return buf;
    default:
      return to_string(kind);
  }
}

DenseMatrix degree_power_gram(const InteractionMatrix& x, double src_exp,
                              double tgt_exp, double user_exp,
                              uint32_t dense_cap) {
  if (user_exp != 0.0 && x.min_user_degree() == 0)
    fail_usage("degree_power_gram: a user has zero interactions");
  if ((src_exp != 0.0 || tgt_exp != 0.0) && x.min_item_degree() == 0)
    fail_usage("degree_power_gram: an item has zero interactions");

  DenseMatrix p;
  if (user_exp == 0.0) {
    p = gram(x, {}, dense_cap);
  } else {
    std::vector<double> w(x.rows());
    for (uint32_t u = 0; u < x.rows(); ++u)
      w[u] = std::pow(static_cast<double>(x.user_degrees()[u]), -user_exp);
    p = gram(x, w, dense_cap);
  }
  if (src_exp == 0.0 && tgt_exp == 0.0) return p;

  const uint32_t n = x.cols();
  std::vector<double> src_scale(n), tgt_scale(n);
  for (uint32_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x.item_degrees()[i]);
    src_scale[i] = src_exp == 0.0 ? 1.0 : std::pow(d, -src_exp);
    // Reusing the source scale when exponents match keeps symmetric recipes
    // bitwise symmetric.
    tgt_scale[i] = tgt_exp == src_exp
                       ? src_scale[i]
                       : (tgt_exp == 0.0 ? 1.0 : std::pow(d, -tgt_exp));
  }
  for (uint32_t j = 0; j < n; ++j)
    for (uint32_t i = 0; i < n; ++i) p(i, j) *= src_scale[i] * tgt_scale[j];
  return p;
}

NormalizedGram build_gram(const InteractionMatrix& x, const NormRecipe& recipe,
                          uint32_t dense_cap) {
  recipe.validate();
  NormalizedGram out;
  out.recipe = recipe;
  switch (recipe.kind) {
    case NormKind::None:
    case NormKind::ColumnWise:
      out.p = gram(x, {}, dense_cap);
      break;
    case NormKind::RW:
      out.p = degree_power_gram(x, 1.0, 0.0, 1.0, dense_cap);
      break;
    case NormKind::Sym:
      out.p = degree_power_gram(x, 0.5, 0.5, 1.0, dense_cap);
      break;
    case NormKind::DAN:
      out.p = degree_power_gram(x, 1.0 - recipe.alpha, recipe.alpha,
                                recipe.beta, dense_cap);
      break;
    case NormKind::UserOnly:
      out.p = degree_power_gram(x, 0.0, 0.0, recipe.beta, dense_cap);
      break;
    case NormKind::ItemOnly:
      out.p = degree_power_gram(x, 1.0 - recipe.alpha, recipe.alpha, 0.0,
                                dense_cap);
      break;
  }
  return out;
}

}  // namespace lare
