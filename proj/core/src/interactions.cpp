#include "lare/interactions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lare/error.hpp"
#include "lare/rng.hpp"

namespace lare {

namespace {

uint64_t cell_key(uint32_t user, uint32_t item, uint32_t cols) {
  return static_cast<uint64_t>(user) * cols + item;
}

void fnv_feed(uint64_t& h, uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 1099511628211ULL;
  }
}

}  // namespace

InteractionMatrix InteractionMatrix::from_entries(uint32_t rows, uint32_t cols,
                                                  std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (e.user >= rows || e.item >= cols)
      fail_usage("interaction entry (" + std::to_string(e.user) + ", " +
                 std::to_string(e.item) + ") outside " + std::to_string(rows) +
                 "x" + std::to_string(cols) + " shape");
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  InteractionMatrix x;
  x.rows_ = rows;
  x.cols_ = cols;
  x.row_ptr_.assign(rows + 1, 0);
  x.col_idx_.reserve(entries.size());
  x.user_deg_.assign(rows, 0);
  x.item_deg_.assign(cols, 0);
  for (const Entry& e : entries) {
    ++x.user_deg_[e.user];
    ++x.item_deg_[e.item];
    x.col_idx_.push_back(e.item);
  }
  uint64_t acc = 0;
  for (uint32_t u = 0; u < rows; ++u) {
    x.row_ptr_[u] = acc;
    acc += x.user_deg_[u];
  }
  x.row_ptr_[rows] = acc;
  return x;
}

double InteractionMatrix::density() const {
  if (rows_ == 0 || cols_ == 0) return 0.0;
  return static_cast<double>(nnz()) /
         (static_cast<double>(rows_) * static_cast<double>(cols_));
}

std::span<const uint32_t> InteractionMatrix::items_of(uint32_t user) const {
  if (user >= rows_) fail_usage("items_of: user index out of range");
  return {col_idx_.data() + row_ptr_[user],
          static_cast<size_t>(row_ptr_[user + 1] - row_ptr_[user])};
}

bool InteractionMatrix::has(uint32_t user, uint32_t item) const {
  auto row = items_of(user);
  return std::binary_search(row.begin(), row.end(), item);
}

uint32_t InteractionMatrix::min_user_degree() const {
  if (user_deg_.empty()) return 0;
  return *std::min_element(user_deg_.begin(), user_deg_.end());
}

uint32_t InteractionMatrix::min_item_degree() const {
  if (item_deg_.empty()) return 0;
  return *std::min_element(item_deg_.begin(), item_deg_.end());
}

std::vector<Entry> InteractionMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (uint32_t u = 0; u < rows_; ++u)
    for (uint32_t i : items_of(u)) out.push_back({u, i});
  return out;
}

uint64_t InteractionMatrix::content_hash() const {
  uint64_t h = 14695981039346656037ULL;
  fnv_feed(h, rows_);
  fnv_feed(h, cols_);
  fnv_feed(h, nnz());
  for (uint32_t u = 0; u < rows_; ++u)
    for (uint32_t i : items_of(u)) {
      fnv_feed(h, u);
      fnv_feed(h, i);
    }
  return h;
}

// --- ingest ---------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  // Trim trailing carriage return from CRLF files.
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool looks_like_header(const std::vector<std::string>& fields) {
  if (fields.size() < 2) return false;
  std::string f0;
  for (char c : fields[0]) f0 += static_cast<char>(std::tolower(c));
  if (f0.rfind("user", 0) == 0) return true;
  if (fields.size() >= 3) {
    double ignored;
    if (!parse_double(fields[2], ignored)) return true;
  }
  return false;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path, const IngestConfig& cfg) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open event file: " + path.string());

  IngestResult res;
  std::unordered_map<std::string, uint32_t> user_index, item_index;
  std::vector<Entry> entries;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_fields(line, cfg.delimiter);
    if (first) {
      first = false;
      if (looks_like_header(fields)) continue;
    }
    ++res.lines_read;
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty())
      fail_io("malformed event line " + std::to_string(res.lines_read) + " in " +
              path.string());
    if (fields.size() >= 3 && cfg.rating_threshold > 0.0) {
      double rating;
      if (!parse_double(fields[2], rating))
        fail_io("non-numeric rating on line " + std::to_string(res.lines_read) +
                " in " + path.string());
      if (rating < cfg.rating_threshold) {
        ++res.lines_dropped;
        continue;
      }
    }
    auto [uit, unew] = user_index.try_emplace(
        fields[0], static_cast<uint32_t>(res.user_ids.size()));
    if (unew) res.user_ids.push_back(fields[0]);
    auto [iit, inew] = item_index.try_emplace(
        fields[1], static_cast<uint32_t>(res.item_ids.size()));
    if (inew) res.item_ids.push_back(fields[1]);
    entries.push_back({uit->second, iit->second});
  }
  if (entries.empty()) fail_io("no usable events in " + path.string());
  res.matrix = InteractionMatrix::from_entries(
      static_cast<uint32_t>(res.user_ids.size()),
      static_cast<uint32_t>(res.item_ids.size()), std::move(entries));
  return res;
}

// --- k-core ---------------------------------------------------------------

KCoreResult k_core(const InteractionMatrix& x, uint32_t min_user_degree,
                   uint32_t min_item_degree) {
  std::vector<char> keep_user(x.rows(), 1), keep_item(x.cols(), 1);
  std::vector<uint32_t> udeg(x.user_degrees()), ideg(x.item_degrees());
  uint32_t passes = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    ++passes;
    std::fill(udeg.begin(), udeg.end(), 0);
    std::fill(ideg.begin(), ideg.end(), 0);
    for (uint32_t u = 0; u < x.rows(); ++u) {
      if (!keep_user[u]) continue;
      for (uint32_t i : x.items_of(u)) {
        if (!keep_item[i]) continue;
        ++udeg[u];
        ++ideg[i];
      }
    }
    for (uint32_t u = 0; u < x.rows(); ++u)
      if (keep_user[u] && udeg[u] < min_user_degree) {
        keep_user[u] = 0;
        changed = true;
      }
    for (uint32_t i = 0; i < x.cols(); ++i)
      if (keep_item[i] && ideg[i] < min_item_degree) {
        keep_item[i] = 0;
        changed = true;
      }
  }

  KCoreResult res;
  std::vector<uint32_t> user_remap(x.rows(), UINT32_MAX),
      item_remap(x.cols(), UINT32_MAX);
  for (uint32_t u = 0; u < x.rows(); ++u)
    if (keep_user[u]) {
      user_remap[u] = static_cast<uint32_t>(res.kept_users.size());
      res.kept_users.push_back(u);
    }
  for (uint32_t i = 0; i < x.cols(); ++i)
    if (keep_item[i]) {
      item_remap[i] = static_cast<uint32_t>(res.kept_items.size());
      res.kept_items.push_back(i);
    }
  if (res.kept_users.empty() || res.kept_items.empty())
    fail_usage("k-core pruning removed the entire matrix");

  std::vector<Entry> entries;
  for (uint32_t u = 0; u < x.rows(); ++u) {
    if (!keep_user[u]) continue;
    for (uint32_t i : x.items_of(u))
      if (keep_item[i]) entries.push_back({user_remap[u], item_remap[i]});
  }
  res.matrix = InteractionMatrix::from_entries(
      static_cast<uint32_t>(res.kept_users.size()),
      static_cast<uint32_t>(res.kept_items.size()), std::move(entries));
  res.passes = passes;
  return res;
}

// --- splits ---------------------------------------------------------------

const char* to_string(Protocol p) {
  return p == Protocol::Strong ? "strong" : "weak";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "strong") return Protocol::Strong;
  if (s == "weak") return Protocol::Weak;
  fail_usage("unknown protocol '" + s + "' (expected strong|weak)");
}

namespace {

void validate_ratios(const std::vector<double>& r) {
  if (r.size() != 2 && r.size() != 3)
    fail_usage("split ratios must have 2 or 3 entries");
  double sum = 0;
  for (double v : r) {
    if (v <= 0) fail_usage("split ratios must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail_usage("split ratios must sum to 1");
}

// Shuffles a user's item list and cuts it so that at least one interaction
// lands on each side. Returns the fold-in count.
size_t foldin_cut(size_t degree, double fraction) {
  size_t cut = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(degree)));
  if (cut >= degree) cut = degree - 1;
  if (cut == 0) cut = 1;
  return cut;
}

}  // namespace

SplitBundle split(const InteractionMatrix& x, const SplitConfig& cfg) {
  validate_ratios(cfg.ratios);
  if (cfg.foldin_fraction <= 0.0 || cfg.foldin_fraction >= 1.0)
    fail_usage("foldin fraction must lie in (0, 1)");
  if (x.rows() < 3) fail_usage("need at least 3 users to split");

  SplitBundle bundle;
  bundle.protocol = cfg.protocol;
  bundle.seed = cfg.seed;
  const bool with_val = cfg.ratios.size() == 3;

  if (cfg.protocol == Protocol::Strong) {
    std::vector<uint32_t> order(x.rows());
    for (uint32_t u = 0; u < x.rows(); ++u) order[u] = u;
    Rng part_rng(mix_seed(cfg.seed, 0xA11));
    part_rng.shuffle(order);

    size_t n_train = static_cast<size_t>(cfg.ratios[0] * x.rows());
    size_t n_val = with_val ? static_cast<size_t>(cfg.ratios[1] * x.rows()) : 0;
    if (n_train == 0 || (with_val && n_val == 0) ||
        n_train + n_val >= x.rows())
      fail_usage("split ratios leave an empty user partition");

    std::vector<uint32_t> train_users(order.begin(), order.begin() + n_train);
    std::vector<uint32_t> val_users(order.begin() + n_train,
                                    order.begin() + n_train + n_val);
    std::vector<uint32_t> test_users(order.begin() + n_train + n_val,
                                     order.end());
    std::sort(train_users.begin(), train_users.end());
    std::sort(val_users.begin(), val_users.end());
    std::sort(test_users.begin(), test_users.end());

    // Items never seen by a training user cannot be modeled; drop them and
    // compact the item space so training degrees stay positive.
    std::vector<char> item_seen(x.cols(), 0);
    for (uint32_t u : train_users)
      for (uint32_t i : x.items_of(u)) item_seen[i] = 1;
    std::vector<uint32_t> item_remap(x.cols(), UINT32_MAX);
    for (uint32_t i = 0; i < x.cols(); ++i)
      if (item_seen[i]) {
        item_remap[i] = static_cast<uint32_t>(bundle.kept_items.size());
        bundle.kept_items.push_back(i);
      }

    std::vector<Entry> train_entries;
    for (uint32_t r = 0; r < train_users.size(); ++r)
      for (uint32_t i : x.items_of(train_users[r]))
        train_entries.push_back({r, item_remap[i]});
    bundle.train = InteractionMatrix::from_entries(
        static_cast<uint32_t>(train_users.size()),
        static_cast<uint32_t>(bundle.kept_items.size()),
        std::move(train_entries));
    bundle.train_users = std::move(train_users);

    auto build_eval = [&](const std::vector<uint32_t>& users, EvalSplit& out) {
      for (uint32_t u : users) {
        std::vector<uint32_t> items;
        for (uint32_t i : x.items_of(u))
          if (item_remap[i] != UINT32_MAX) items.push_back(item_remap[i]);
        if (items.size() < 2) {
          ++bundle.skipped_eval_users;
          continue;
        }
        Rng user_rng(mix_seed(cfg.seed, u));
        user_rng.shuffle(items);
        size_t cut = foldin_cut(items.size(), cfg.foldin_fraction);
        std::vector<uint32_t> fold(items.begin(), items.begin() + cut);
        std::vector<uint32_t> held(items.begin() + cut, items.end());
        std::sort(fold.begin(), fold.end());
        std::sort(held.begin(), held.end());
        out.users.push_back(u);
        out.foldin.push_back(std::move(fold));
        out.heldout.push_back(std::move(held));
      }
    };
    build_eval(val_users, bundle.validation);
    build_eval(test_users, bundle.test);
  } else {
    // Weak: every user trains; each user's interactions are cut into
    // train/(validation)/test parts.
    struct UserCut {
      std::vector<uint32_t> train, val, test;
    };
    std::vector<UserCut> cuts(x.rows());
    for (uint32_t u = 0; u < x.rows(); ++u) {
      auto row = x.items_of(u);
      std::vector<uint32_t> items(row.begin(), row.end());
      if (items.size() == 1) {
        cuts[u].train = std::move(items);
        continue;
      }
      Rng user_rng(mix_seed(cfg.seed, u));
      user_rng.shuffle(items);
      size_t d = items.size();
      size_t n_train = foldin_cut(d, cfg.ratios[0]);
      size_t n_val =
          with_val ? static_cast<size_t>(cfg.ratios[1] * static_cast<double>(d))
                   : 0;
      if (n_train + n_val > d) n_val = d - n_train;
      cuts[u].train.assign(items.begin(), items.begin() + n_train);
      cuts[u].val.assign(items.begin() + n_train,
                         items.begin() + n_train + n_val);
      cuts[u].test.assign(items.begin() + n_train + n_val, items.end());
    }

    std::vector<char> item_seen(x.cols(), 0);
    for (uint32_t u = 0; u < x.rows(); ++u)
      for (uint32_t i : cuts[u].train) item_seen[i] = 1;
    std::vector<uint32_t> item_remap(x.cols(), UINT32_MAX);
    for (uint32_t i = 0; i < x.cols(); ++i)
      if (item_seen[i]) {
        item_remap[i] = static_cast<uint32_t>(bundle.kept_items.size());
        bundle.kept_items.push_back(i);
      }

    std::vector<Entry> train_entries;
    for (uint32_t u = 0; u < x.rows(); ++u)
      for (uint32_t i : cuts[u].train)
        train_entries.push_back({u, item_remap[i]});
    bundle.train = InteractionMatrix::from_entries(
        x.rows(), static_cast<uint32_t>(bundle.kept_items.size()),
        std::move(train_entries));
    bundle.train_users.resize(x.rows());
    for (uint32_t u = 0; u < x.rows(); ++u) bundle.train_users[u] = u;

    auto remap_sorted = [&](const std::vector<uint32_t>& items) {
      std::vector<uint32_t> out;
      for (uint32_t i : items)
        if (item_remap[i] != UINT32_MAX) out.push_back(item_remap[i]);
      std::sort(out.begin(), out.end());
      return out;
    };
    auto add_eval = [&](uint32_t u, const std::vector<uint32_t>& held_raw,
                        EvalSplit& out) {
      if (held_raw.empty()) return;
      auto held = remap_sorted(held_raw);
      if (held.empty()) {
        ++bundle.skipped_eval_users;
        return;
      }
      auto row = bundle.train.items_of(u);
      out.users.push_back(u);
      out.foldin.emplace_back(row.begin(), row.end());
      out.heldout.push_back(std::move(held));
    };
    for (uint32_t u = 0; u < x.rows(); ++u) {
      if (with_val) add_eval(u, cuts[u].val, bundle.validation);
      add_eval(u, cuts[u].test, bundle.test);
    }
  }

  if (bundle.test.empty()) fail_usage("split produced no evaluable test users");
  if (with_val && bundle.validation.empty())
    fail_usage("split produced no evaluable validation users");
  return bundle;
}

// --- noise ----------------------------------------------------------------

InteractionMatrix inject_noise(const InteractionMatrix& x,
                               const NoiseConfig& cfg) {
  if (cfg.ratio_percent < 0.0 || cfg.ratio_percent > 100.0)
    fail_usage("noise ratio must lie in [0, 100] percent");
  uint64_t k = static_cast<uint64_t>(
      std::llround(cfg.ratio_percent / 100.0 * static_cast<double>(x.nnz())));
  if (k == 0) return x;

  uint64_t total_cells =
      static_cast<uint64_t>(x.rows()) * static_cast<uint64_t>(x.cols());
  if (k > total_cells - x.nnz())
    fail_usage("noise ratio asks for more additions than there are empty cells");

  Rng rng(mix_seed(cfg.seed, 0x0153));
  auto entries = x.entries();

  // Removal pass: walk a shuffled order, skipping any cell whose removal
  // would zero out a user or item.
  std::vector<uint64_t> order(entries.size());
  for (uint64_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<uint32_t> udeg(x.user_degrees()), ideg(x.item_degrees());
  std::vector<char> removed(entries.size(), 0);
  uint64_t n_removed = 0;
  for (uint64_t idx : order) {
    if (n_removed == k) break;
    const Entry& e = entries[idx];
    if (udeg[e.user] <= 1 || ideg[e.item] <= 1) continue;
    removed[idx] = 1;
    --udeg[e.user];
    --ideg[e.item];
    ++n_removed;
  }
  if (n_removed < k)
    fail_usage("noise ratio too high: cannot remove " + std::to_string(k) +
               " cells without emptying a user or item");

  std::unordered_set<uint64_t> occupied;
  occupied.reserve(x.nnz() * 2);
  for (const Entry& e : entries) occupied.insert(cell_key(e.user, e.item, x.cols()));

  std::vector<Entry> result;
  result.reserve(x.nnz());
  for (uint64_t i = 0; i < entries.size(); ++i)
    if (!removed[i]) result.push_back(entries[i]);

  // Addition pass: uniform over cells absent from the original matrix.
  uint64_t added = 0, attempts = 0;
  const uint64_t max_attempts = 1000 * k + 1000;
  while (added < k) {
    if (++attempts > max_attempts)
      fail_usage("noise injection could not place additions (matrix too dense)");
    uint32_t u = static_cast<uint32_t>(rng.below(x.rows()));
    uint32_t i = static_cast<uint32_t>(rng.below(x.cols()));
    if (!occupied.insert(cell_key(u, i, x.cols())).second) continue;
    result.push_back({u, i});
    ++added;
  }
  return InteractionMatrix::from_entries(x.rows(), x.cols(), std::move(result));
}

// --- text format ----------------------------------------------------------

void write_matrix(const std::filesystem::path& path,
                  const InteractionMatrix& x) {
  std::ofstream out(path);
  if (!out) fail_io("cannot write matrix file: " + path.string());
  out << "LAREX " << x.rows() << ' ' << x.cols() << ' ' << x.nnz() << '\n';
  for (uint32_t u = 0; u < x.rows(); ++u)
    for (uint32_t i : x.items_of(u)) out << u << ' ' << i << '\n';
  if (!out) fail_io("short write to matrix file: " + path.string());
}

InteractionMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open matrix file: " + path.string());
  std::string magic;
  uint64_t rows, cols, nnz;
  if (!(in >> magic >> rows >> cols >> nnz) || magic != "LAREX")
    fail_io("bad matrix header in " + path.string());
  if (rows == 0 || cols == 0 || rows > UINT32_MAX || cols > UINT32_MAX)
    fail_io("matrix shape out of range in " + path.string());
  std::vector<Entry> entries;
  entries.reserve(nnz);
  for (uint64_t c = 0; c < nnz; ++c) {
    uint64_t u, i;
    if (!(in >> u >> i))
      fail_io("truncated matrix file (expected " + std::to_string(nnz) +
              " entries): " + path.string());
    if (u >= rows || i >= cols)
      fail_io("entry out of range in " + path.string());
    entries.push_back(
        {static_cast<uint32_t>(u), static_cast<uint32_t>(i)});
  }
  std::string tail;
  if (in >> tail) fail_io("trailing data in " + path.string());
  auto x = InteractionMatrix::from_entries(static_cast<uint32_t>(rows),
                                           static_cast<uint32_t>(cols),
                                           std::move(entries));
  if (x.nnz() != nnz) fail_io("duplicate entries in " + path.string());
  return x;
}

void write_index_map(const std::filesystem::path& path,
                     const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) fail_io("cannot write index map: " + path.string());
  for (const auto& id : ids) out << id << '\n';
  if (!out) fail_io("short write to index map: " + path.string());
}

std::vector<std::string> read_index_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open index map: " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(line);
  }
  return ids;
}

}  // namespace lare
