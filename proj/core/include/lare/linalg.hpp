#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lare/interactions.hpp"

namespace lare {

// Column-major in memory (Eigen default); the on-disk format below is
// row-major and conversion happens at the I/O boundary.
using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

// Guards against accidentally materializing an n x n matrix that cannot fit.
inline constexpr uint32_t kDenseItemCap = 32768;

void check_dense_cap(uint32_t n_items, uint32_t cap = kDenseItemCap);

// P = X^T diag(w) X accumulated per user over the upper triangle and then
// mirrored, so the result is symmetric down to the bit. Empty weights mean
// w = 1. Requires every item degree >= 1.
DenseMatrix gram(const InteractionMatrix& x,
                 std::span<const double> user_weights = {},
                 uint32_t dense_cap = kDenseItemCap);

// Solves A Z = rhs for symmetric positive definite A via Cholesky. Rejects
// asymmetric input (max |A - A^T| > 1e-10) and names the first
// non-positive pivot when A is not positive definite.
DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& rhs);

// A^{-1} through the same factorization path as solve_spd.
DenseMatrix spd_inverse(const DenseMatrix& a);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending
  std::string source;               // what was decomposed, carried into output
};

// Full symmetric eigendecomposition, values descending.
SpectrumReport eig_sym(const DenseMatrix& a, std::string source_tag);

struct EigPairs {
  DenseVector values;   // descending
  DenseMatrix vectors;  // columns aligned with values
};
EigPairs eig_sym_pairs(const DenseMatrix& a);

// Binary layout: "LARE" magic, u16 version, u16 pad, u32 rows, u32 cols,
// then rows*cols little-endian f64 in row-major order. Round-trips bit
// exactly.
void save_dense(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_dense(const std::filesystem::path& path);

}  // namespace lare
