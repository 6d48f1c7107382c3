#pragma once

#include <string>

#include "lare/interactions.hpp"
#include "lare/linalg.hpp"

namespace lare {

// How the gram matrix is rescaled before ridge regression.
//   None       raw co-occurrence counts
//   RW         both sides degree-normalized, random-walk style
//   Sym        symmetric half-power item scaling
//   DAN        item split alpha, user strength beta; RW = (alpha 0, beta 1),
//              Sym = (alpha 0.5, beta 1)
//   UserOnly   user-side scaling only (beta)
//   ItemOnly   item-side scaling only (alpha split, no user term)
//   ColumnWise raw gram; columns of the solved weights are rescaled by
//              item degree to the power gamma afterwards
enum class NormKind { None, RW, Sym, DAN, UserOnly, ItemOnly, ColumnWise };

const char* to_string(NormKind k);
NormKind norm_kind_from_string(const std::string& s);

struct NormRecipe {
  NormKind kind = NormKind::None;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;  // ColumnWise only

  void validate() const;  // alpha in [0,1], beta in [0,1], gamma >= 0
  bool scales_gram() const;
  std::string label() const;  // e.g. "dan(alpha=0.2,beta=0.6)"

  static NormRecipe none() { return {}; }
  static NormRecipe rw() { return {NormKind::RW, 0, 0, 0}; }
  static NormRecipe sym() { return {NormKind::Sym, 0, 0, 0}; }
  static NormRecipe dan(double alpha, double beta) {
    return {NormKind::DAN, alpha, beta, 0};
  }
  static NormRecipe user_only(double beta) {
    return {NormKind::UserOnly, 0, beta, 0};
  }
  static NormRecipe item_only(double alpha) {
    return {NormKind::ItemOnly, alpha, 0, 0};
  }
  static NormRecipe column_wise(double gamma) {
    return {NormKind::ColumnWise, 0, 0, gamma};
  }

  friend bool operator==(const NormRecipe&, const NormRecipe&) = default;
};

// D_I^{-src} (X^T D_U^{-user} X) D_I^{-tgt} built without materializing the
// scaled sparse factors: the raw gram is accumulated with per-user weights
// d_u^{-user}, then rows/columns are scaled by the item degree powers.
// Symmetric exponents (src == tgt) give a bitwise symmetric result.
// Any side with a nonzero exponent must have all degrees >= 1.
DenseMatrix degree_power_gram(const InteractionMatrix& x, double src_exp,
                              double tgt_exp, double user_exp,
                              uint32_t dense_cap = kDenseItemCap);

struct NormalizedGram {
  DenseMatrix p;
  NormRecipe recipe;
};

// Dispatches a recipe onto degree_power_gram. ColumnWise and None return the
// raw gram; ColumnWise's gamma applies after the solve, not here.
NormalizedGram build_gram(const InteractionMatrix& x, const NormRecipe& recipe,
                          uint32_t dense_cap = kDenseItemCap);

}  // namespace lare
