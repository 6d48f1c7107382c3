#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lare/interactions.hpp"

namespace lare::cli {

// On-disk layout produced by `prepare` and consumed by every downstream
// command:
//   train.mtx              training matrix
//   {val,test}_foldin.mtx  per eval-user fold-in rows (val_* optional)
//   {val,test}_heldout.mtx matching held-out rows
//   {val,test}_users.tsv   input row index per eval row
//   train_users.tsv        input row index per train row
//   users.tsv, items.tsv   external ids (items in the train column space)
//   split.txt              protocol, ratios, seed, skip count
struct PreparedData {
  SplitBundle bundle;
  std::vector<std::string> user_ids;  // input row -> external id
  std::vector<std::string> item_ids;  // train column -> external id
};

void save_prepared(const std::filesystem::path& dir, const SplitBundle& bundle,
                   const std::vector<std::string>& user_ids,
                   const std::vector<std::string>& item_ids,
                   const std::vector<double>& ratios, double foldin_fraction);

PreparedData load_prepared(const std::filesystem::path& dir,
                           bool need_validation);

}  // namespace lare::cli
