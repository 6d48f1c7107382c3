#include "lare/linalg.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lare/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "dense file I/O assumes a little-endian host");

namespace lare {

void check_dense_cap(uint32_t n_items, uint32_t cap) {
  if (n_items > cap)
    fail_usage("item count " + std::to_string(n_items) +
               " exceeds the dense cap of " + std::to_string(cap));
}

DenseMatrix gram(const InteractionMatrix& x, std::span<const double> user_weights,
                 uint32_t dense_cap) {
  check_dense_cap(x.cols(), dense_cap);
  if (!user_weights.empty() && user_weights.size() != x.rows())
    fail_usage("gram: user weight vector length does not match row count");
  if (x.min_item_degree() == 0)
    fail_usage("gram: an item has zero interactions; compact the item space first");

  const uint32_t n = x.cols();
  DenseMatrix p = DenseMatrix::Zero(n, n);
  for (uint32_t u = 0; u < x.rows(); ++u) {
    const double w = user_weights.empty() ? 1.0 : user_weights[u];
    auto row = x.items_of(u);
    for (size_t a = 0; a < row.size(); ++a) {
      const uint32_t i = row[a];
      for (size_t b = a; b < row.size(); ++b) p(i, row[b]) += w;
    }
  }
  // Mirror the accumulated upper triangle; copying keeps both halves
  // bit-identical.
  for (uint32_t j = 0; j < n; ++j)
    for (uint32_t i = j + 1; i < n; ++i) p(i, j) = p(j, i);
  return p;
}

namespace {

void check_square_symmetric(const DenseMatrix& a, const char* who) {
  if (a.rows() != a.cols())
    fail_usage(std::string(who) + ": matrix is not square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    fail_usage(std::string(who) + ": matrix is asymmetric by " +
               std::to_string(asym));
}

// Unblocked Cholesky retried only to name the pivot where positive
// definiteness fails; the fast path is Eigen's LLT.
[[noreturn]] void report_bad_pivot(const DenseMatrix& a, const char* who) {
  const Eigen::Index n = a.rows();
  DenseMatrix l = DenseMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d))
      fail_numeric(std::string(who) + ": matrix is not positive definite (pivot " +
                   std::to_string(j) + " = " + std::to_string(d) + ")");
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) =
          (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  fail_numeric(std::string(who) + ": factorization failed");
}

Eigen::LLT<DenseMatrix> cholesky(const DenseMatrix& a, const char* who) {
  check_square_symmetric(a, who);
  if (!a.allFinite())
    fail_numeric(std::string(who) + ": matrix has non-finite entries");
  Eigen::LLT<DenseMatrix> llt(a);
  if (llt.info() != Eigen::Success) report_bad_pivot(a, who);
  return llt;
}

}  // namespace

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& rhs) {
  if (a.rows() != rhs.rows())
    fail_usage("solve_spd: rhs row count does not match matrix");
  auto llt = cholesky(a, "solve_spd");
  DenseMatrix z = llt.solve(rhs);
  if (!z.allFinite()) fail_numeric("solve_spd: solution has non-finite entries");
  return z;
}

DenseMatrix spd_inverse(const DenseMatrix& a) {
  auto llt = cholesky(a, "spd_inverse");
  DenseMatrix inv =
      llt.solve(DenseMatrix::Identity(a.rows(), a.cols()));
  if (!inv.allFinite())
    fail_numeric("spd_inverse: inverse has non-finite entries");
  return inv;
}

SpectrumReport eig_sym(const DenseMatrix& a, std::string source_tag) {
  auto pairs = eig_sym_pairs(a);
  SpectrumReport rep;
  rep.source = std::move(source_tag);
  rep.eigenvalues.assign(pairs.values.data(),
                         pairs.values.data() + pairs.values.size());
  return rep;
}

EigPairs eig_sym_pairs(const DenseMatrix& a) {
  check_square_symmetric(a, "eig_sym");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
  if (es.info() != Eigen::Success)
    fail_numeric("eig_sym: eigendecomposition did not converge");
  // Eigen returns ascending order; flip to descending.
  EigPairs out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

namespace {

constexpr char kDenseMagic[4] = {'L', 'A', 'R', 'E'};
constexpr uint16_t kDenseVersion = 1;

}  // namespace

void save_dense(const std::filesystem::path& path, const DenseMatrix& m) {
  if (m.rows() < 0 || m.cols() < 0 || m.rows() > UINT32_MAX ||
      m.cols() > UINT32_MAX)
    fail_usage("save_dense: shape out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write dense file: " + path.string());
  const uint16_t version = kDenseVersion, pad = 0;
  const uint32_t rows = static_cast<uint32_t>(m.rows());
  const uint32_t cols = static_cast<uint32_t>(m.cols());
  out.write(kDenseMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), 2);
  out.write(reinterpret_cast<const char*>(&pad), 2);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  // Stream row-major regardless of in-memory layout.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!out) fail_io("short write to dense file: " + path.string());
}

DenseMatrix load_dense(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open dense file: " + path.string());
  char magic[4];
  uint16_t version = 0, pad = 0;
  uint32_t rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 2);
  in.read(reinterpret_cast<char*>(&pad), 2);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, kDenseMagic, 4) != 0)
    fail_io("bad dense file header: " + path.string());
  if (version != kDenseVersion)
    fail_io("unsupported dense file version " + std::to_string(version) +
            ": " + path.string());
  if (static_cast<uint64_t>(rows) * cols > (1ULL << 28))
    fail_io("implausible dense shape in " + path.string());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(sizeof(double) * rm.size()))
    fail_io("truncated dense file: " + path.string());
  char extra;
  if (in.read(&extra, 1)) fail_io("trailing data in dense file: " + path.string());
  return rm;
}

}  // namespace lare
