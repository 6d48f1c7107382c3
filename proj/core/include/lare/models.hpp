#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <utility>

#include "lare/interactions.hpp"
#include "lare/linalg.hpp"
#include "lare/normalization.hpp"

namespace lare {

// LAE   ridge-regularized least squares, free diagonal
// EASE  same objective with the diagonal constrained to zero
// DLAE  denoising variant: ridge term lambda * diag(gram), equivalent to
//       feature dropout with rate p = lambda / (1 + lambda)
enum class ModelKind { LAE, EASE, DLAE };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct SolverConfig {
  ModelKind model = ModelKind::LAE;
  double lambda = 1.0;
  NormRecipe recipe{};
  // DLAE only: when set, lambda is derived as p / (1 - p).
  std::optional<double> dropout_p;

  double effective_lambda() const;
  double effective_dropout() const;  // lambda / (1 + lambda)
  void validate() const;
  std::string label() const;  // e.g. "ease+dan(alpha=0.2,beta=0.6)@12.5"
};

struct FitStats {
  double fit_seconds = 0.0;
  // Relative norm of the normal-equation residual (off-diagonal part for
  // EASE, whose stationarity condition is diagonal by construction).
  double residual = 0.0;
  bool residual_sampled = false;  // true when estimated from sampled columns
};

struct ItemModel {
  DenseMatrix b;  // n x n item-item weights; scores = fold-in row times b
  SolverConfig config;
  uint32_t num_users = 0;
  uint32_t num_items = 0;
  uint64_t dataset_hash = 0;
  FitStats stats;
};

// One factorization per fit: C = (gram + ridge)^{-1} yields the LAE and DLAE
// weights directly and the EASE weights after the zero-diagonal rescale.
ItemModel fit(const InteractionMatrix& x, const SolverConfig& cfg,
              uint32_t dense_cap = kDenseItemCap);

ItemModel fit_lae(const InteractionMatrix& x, double lambda,
                  const NormRecipe& recipe = {});
ItemModel fit_ease(const InteractionMatrix& x, double lambda,
                   const NormRecipe& recipe = {});
ItemModel fit_dlae(const InteractionMatrix& x, double lambda);
ItemModel fit_dlae_dropout(const InteractionMatrix& x, double dropout_p);

// Item-scaled ridge identity: fitting on the item-split gram
// D^{-(1-alpha)} X^T X D^{-alpha} equals conjugating the DLAE weights by
// D^alpha. Returns (lhs, rhs) for inspection; they agree to solver accuracy.
std::pair<DenseMatrix, DenseMatrix> item_scaling_identity(
    const InteractionMatrix& x, double alpha, double lambda);

// Scores every item for a user described by fold-in items. Fold-in columns
// are replaced with the mask sentinel when mask_seen is set; downstream
// ranking drops sentinel entries entirely.
inline constexpr double kMaskSentinel = std::numeric_limits<double>::lowest();
std::vector<double> score(const ItemModel& model,
                          std::span<const uint32_t> foldin,
                          bool mask_seen = true);

// Weights go to "<path>" in the dense binary layout; config and provenance
// go to "<path>.meta" as key: value lines. Round-trips b and config exactly.
void save_model(const std::filesystem::path& path, const ItemModel& model);
ItemModel load_model(const std::filesystem::path& path);

}  // namespace lare
