#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lare {

struct Entry {
  uint32_t user = 0;
  uint32_t item = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
  friend auto operator<=>(const Entry&, const Entry&) = default;
};

// Immutable binary user-item matrix in CSR form. Rows are users, columns are
// items, every stored cell has value 1. Entries are deduplicated and kept
// sorted by (user, item), which makes iteration order and the content hash
// well defined.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  static InteractionMatrix from_entries(uint32_t rows, uint32_t cols,
                                        std::vector<Entry> entries);

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  uint64_t nnz() const { return col_idx_.size(); }
  double density() const;

  std::span<const uint32_t> items_of(uint32_t user) const;
  bool has(uint32_t user, uint32_t item) const;

  const std::vector<uint32_t>& user_degrees() const { return user_deg_; }
  const std::vector<uint32_t>& item_degrees() const { return item_deg_; }
  uint32_t min_user_degree() const;
  uint32_t min_item_degree() const;

  std::vector<Entry> entries() const;

  // FNV-1a over dimensions and the sorted entry stream; stable across runs
  // and platforms, used to tie models and reports back to their data.
  uint64_t content_hash() const;

 private:
  uint32_t rows_ = 0, cols_ = 0;
  std::vector<uint64_t> row_ptr_;
  std::vector<uint32_t> col_idx_;
  std::vector<uint32_t> user_deg_, item_deg_;
};

// --- ingest ---------------------------------------------------------------

struct IngestConfig {
  char delimiter = '\t';
  // Events with a rating column below this value are dropped; events without
  // a rating column always pass.
  double rating_threshold = 0.0;
};

struct IngestResult {
  InteractionMatrix matrix;
  std::vector<std::string> user_ids;  // row index -> external id
  std::vector<std::string> item_ids;  // col index -> external id
  uint64_t lines_read = 0;
  uint64_t lines_dropped = 0;
};

// Reads "user<delim>item[<delim>rating[<delim>...]]" event lines. External
// ids are arbitrary strings; internal indices are assigned in first-seen
// order. The first line is skipped as a header when its leading field starts
// with "user" or its rating field is non-numeric.
IngestResult ingest(const std::filesystem::path& path, const IngestConfig& cfg = {});

// --- k-core ---------------------------------------------------------------

struct KCoreResult {
  InteractionMatrix matrix;
  std::vector<uint32_t> kept_users;  // new row -> old row
  std::vector<uint32_t> kept_items;  // new col -> old col
  uint32_t passes = 0;
};

// Alternates user/item degree pruning until every user has >= min_user_degree
// and every item has >= min_item_degree interactions. Indices are compacted;
// the kept_* vectors map the compacted space back to the input space.
KCoreResult k_core(const InteractionMatrix& x, uint32_t min_user_degree,
                   uint32_t min_item_degree);

// --- splits ---------------------------------------------------------------

enum class Protocol { Strong, Weak };

const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

// Held-out evaluation data for one user population: per user a fold-in set
// (items the model may condition on) and a held-out set (the ground truth).
// Item indices live in the train matrix's column space; users holds the row
// index of each eval user in the matrix the split was built from.
struct EvalSplit {
  std::vector<uint32_t> users;
  std::vector<std::vector<uint32_t>> foldin;
  std::vector<std::vector<uint32_t>> heldout;
  bool empty() const { return users.empty(); }
};

struct SplitConfig {
  Protocol protocol = Protocol::Strong;
  // User fractions (strong) or per-user interaction fractions (weak).
  // Two entries = train/test, three = train/validation/test.
  std::vector<double> ratios = {0.8, 0.1, 0.1};
  // Strong protocol: fraction of an eval user's interactions revealed as
  // fold-in; the remainder is held out. Fold-in count is ceil(f * d) capped
  // so that at least one interaction stays held out.
  double foldin_fraction = 0.8;
  uint64_t seed = 0;
};

struct SplitBundle {
  InteractionMatrix train;
  EvalSplit validation;
  EvalSplit test;
  Protocol protocol = Protocol::Strong;
  uint64_t seed = 0;
  // Maps from the bundle's compacted spaces back to the input matrix.
  std::vector<uint32_t> train_users;  // train row -> input row (strong); identity (weak)
  std::vector<uint32_t> kept_items;   // train col -> input col
  // Users dropped from evaluation because they had too few interactions.
  uint64_t skipped_eval_users = 0;
};

// Strong: partitions users into train/(validation)/test, folds in part of
// each eval user's history. Items unseen in the training rows are dropped
// and the item space recompacted so every training item degree is >= 1.
// Weak: keeps every user a training row, splitting each user's interactions
// into train/(validation)/test; fold-in is the user's training row.
// Users left without held-out items are excluded from the eval lists and
// counted in skipped_eval_users.
SplitBundle split(const InteractionMatrix& x, const SplitConfig& cfg);

// --- noise ----------------------------------------------------------------

struct NoiseConfig {
  double ratio_percent = 0.0;  // r: remove and add round(r/100 * nnz) cells
  uint64_t seed = 0;
};

// Structure-preserving perturbation: removes k = round(r% * nnz) existing
// cells and adds k cells drawn uniformly from the unobserved ones, keeping
// nnz constant. Removals that would empty a user row or item column are
// skipped so downstream degree contracts keep holding.
InteractionMatrix inject_noise(const InteractionMatrix& x, const NoiseConfig& cfg);

// --- text format ----------------------------------------------------------

// "LAREX <rows> <cols> <nnz>" header followed by nnz "user item" lines in
// sorted order. Round-trips exactly.
void write_matrix(const std::filesystem::path& path, const InteractionMatrix& x);
InteractionMatrix read_matrix(const std::filesystem::path& path);

// One external id per line; row number = internal index.
void write_index_map(const std::filesystem::path& path,
                     const std::vector<std::string>& ids);
std::vector<std::string> read_index_map(const std::filesystem::path& path);

}  // namespace lare
