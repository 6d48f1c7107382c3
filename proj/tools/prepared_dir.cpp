#include "prepared_dir.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lare/error.hpp"

namespace lare::cli {
namespace {

namespace fs = std::filesystem;

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) fail_io("cannot open " + path.string() + " for writing");
  for (const auto& line : lines) out << line << '\n';
  if (!out) fail_io("short write to " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_index_column(const fs::path& path, const std::vector<uint32_t>& v) {
  std::vector<std::string> lines;
  lines.reserve(v.size());
  for (uint32_t x : v) lines.push_back(std::to_string(x));
  write_lines(path, lines);
}

std::vector<uint32_t> read_index_column(const fs::path& path) {
  std::vector<uint32_t> v;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    size_t pos = 0;
    unsigned long x = std::stoul(line, &pos);
    if (pos != line.size()) fail_io("bad index line in " + path.string());
    v.push_back(static_cast<uint32_t>(x));
  }
  return v;
}

// Eval splits are stored as two aligned matrices whose row r is eval user r.
InteractionMatrix rows_to_matrix(const std::vector<std::vector<uint32_t>>& rows,
                                 uint32_t num_items) {
  std::vector<Entry> entries;
  for (uint32_t r = 0; r < rows.size(); ++r)
    for (uint32_t item : rows[r]) entries.push_back({r, item});
  return InteractionMatrix::from_entries(static_cast<uint32_t>(rows.size()),
                                         num_items, std::move(entries));
}

std::vector<std::vector<uint32_t>> matrix_to_rows(const InteractionMatrix& x) {
  std::vector<std::vector<uint32_t>> rows(x.rows());
  for (uint32_t u = 0; u < x.rows(); ++u) {
    auto items = x.items_of(u);
    rows[u].assign(items.begin(), items.end());
  }
  return rows;
}

void save_eval(const fs::path& dir, const std::string& stem,
               const EvalSplit& split, uint32_t num_items) {
  write_matrix(dir / (stem + "_foldin.mtx"),
               rows_to_matrix(split.foldin, num_items));
  write_matrix(dir / (stem + "_heldout.mtx"),
               rows_to_matrix(split.heldout, num_items));
  write_index_column(dir / (stem + "_users.tsv"), split.users);
}

EvalSplit load_eval(const fs::path& dir, const std::string& stem) {
  EvalSplit split;
  split.users = read_index_column(dir / (stem + "_users.tsv"));
  split.foldin = matrix_to_rows(read_matrix(dir / (stem + "_foldin.mtx")));
  split.heldout = matrix_to_rows(read_matrix(dir / (stem + "_heldout.mtx")));
  if (split.foldin.size() != split.users.size() ||
      split.heldout.size() != split.users.size())
    fail_io("eval split " + stem + " has inconsistent row counts");
  return split;
}

}  // namespace

void save_prepared(const fs::path& dir, const SplitBundle& bundle,
                   const std::vector<std::string>& user_ids,
                   const std::vector<std::string>& item_ids,
                   const std::vector<double>& ratios, double foldin_fraction) {
  fs::create_directories(dir);
  write_matrix(dir / "train.mtx", bundle.train);
  write_index_column(dir / "train_users.tsv", bundle.train_users);
  if (!bundle.validation.empty())
    save_eval(dir, "val", bundle.validation, bundle.train.cols());
  save_eval(dir, "test", bundle.test, bundle.train.cols());
  write_index_map(dir / "users.tsv", user_ids);
  write_index_map(dir / "items.tsv", item_ids);

  std::ostringstream ratio_text;
  for (size_t i = 0; i < ratios.size(); ++i) {
    if (i) ratio_text << ' ';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", ratios[i]);
    ratio_text << buf;
  }
  char foldin_buf[32];
  std::snprintf(foldin_buf, sizeof foldin_buf, "%.17g", foldin_fraction);
  write_lines(dir / "split.txt",
              {"protocol: " + std::string(to_string(bundle.protocol)),
               "ratios: " + ratio_text.str(),
               "foldin_fraction: " + std::string(foldin_buf),
               "seed: " + std::to_string(bundle.seed),
               "skipped_eval_users: " + std::to_string(bundle.skipped_eval_users)});
}

PreparedData load_prepared(const fs::path& dir, bool need_validation) {
  if (!fs::exists(dir / "train.mtx"))
    fail_io("no prepared dataset at " + dir.string() + " (missing train.mtx)");

  std::map<std::string, std::string> meta;
  for (const auto& line : read_lines(dir / "split.txt")) {
    auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    meta[line.substr(0, colon)] = line.substr(colon + 2);
  }
  if (!meta.count("protocol") || !meta.count("seed"))
    fail_io("split.txt in " + dir.string() + " is incomplete");

  PreparedData data;
  data.bundle.train = read_matrix(dir / "train.mtx");
  data.bundle.train_users = read_index_column(dir / "train_users.tsv");
  data.bundle.protocol = protocol_from_string(meta["protocol"]);
  data.bundle.seed = std::stoull(meta["seed"]);
  data.bundle.skipped_eval_users =
      meta.count("skipped_eval_users") ? std::stoull(meta["skipped_eval_users"])
                                       : 0;
  data.bundle.test = load_eval(dir, "test");
  if (fs::exists(dir / "val_users.tsv")) {
    data.bundle.validation = load_eval(dir, "val");
  } else if (need_validation) {
    fail_usage("prepared dataset at " + dir.string() +
               " has no validation split; re-run prepare with three ratios");
  }
  data.user_ids = read_index_map(dir / "users.tsv");
  data.item_ids = read_index_map(dir / "items.tsv");
  if (data.item_ids.size() != data.bundle.train.cols())
    fail_io("items.tsv does not match train.mtx column count");
  return data;
}

}  // namespace lare::cli
