#pragma once

#include <optional>

#include "lare/evaluation.hpp"
#include "lare/interactions.hpp"
#include "lare/models.hpp"

namespace lare {

// Number of fit workers: explicit request, else LARE_THREADS, else 1.
uint32_t resolve_threads(uint32_t requested);

// Runs tasks 0..count-1 on up to `threads` workers. Results land in
// index order regardless of scheduling, so callers stay deterministic.
void parallel_for(uint64_t count, uint32_t threads,
                  const std::function<void(uint64_t)>& task);

struct SelectionMetric {
  Slice slice = Slice::AOA;
  std::string metric = "ndcg";
  uint32_t k = 20;
  std::string label() const;
};

struct SweepSpec {
  std::vector<ModelKind> models = {ModelKind::LAE};
  std::vector<NormKind> recipes = {NormKind::DAN};
  std::vector<double> lambdas;
  std::vector<double> alphas = {0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> betas = {0, 0.1, 0.2, 0.3, 0.4, 0.5,
                               0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> gammas = {0.25, 0.5, 0.75, 1.0};
  SelectionMetric selection{};
  EvalConfig eval{};
  uint32_t threads = 0;

  // Cartesian expansion; recipe-irrelevant axes collapse so none/rw/sym only
  // vary over lambda.
  std::vector<SolverConfig> expand() const;
};

// Sensible ridge grids: normalized grams sit at O(1) scale, raw ones at
// degree scale.
std::vector<double> default_lambdas_normalized();
std::vector<double> default_lambdas_raw();

struct SweepRow {
  SolverConfig config;
  double selection_value = 0.0;
  EvalReport validation;
  EvalReport test;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // expansion order
  size_t best = 0;             // argmax of selection_value on validation
};

// Fits every grid point on the train matrix, scores validation and test.
// Selection uses validation only; test numbers ride along for reporting.
SweepResult run_sweep(const SplitBundle& bundle, const SweepSpec& spec);

struct AblationSpec {
  std::vector<double> lambdas_raw;         // for none-recipe families
  std::vector<double> lambdas_normalized;  // for rescaled families
  std::vector<double> alphas = {0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> betas = {0, 0.1, 0.2, 0.3, 0.4, 0.5,
                               0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> gammas = {0.25, 0.5, 0.75, 1.0};
  SelectionMetric selection{};
  EvalConfig eval{};
  uint32_t threads = 0;
};

struct AblationRow {
  std::string method;
  std::optional<SolverConfig> config;  // empty for the popularity baseline
  double selection_value = 0.0;        // validation
  EvalReport test;
};

// One row per method family (popularity baseline, plain/denoising/zero-diag
// solvers, each normalization family), each tuned on validation within its
// own grid and reported on test.
std::vector<AblationRow> run_ablation(const SplitBundle& bundle,
                                      const AblationSpec& spec);

struct NoiseSpec {
  std::vector<double> ratios = {0, 2, 5, 10, 20};  // percent
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::vector<SolverConfig> configs;
  SelectionMetric metric{};
  EvalConfig eval{};
  uint32_t threads = 0;
};

struct NoiseRow {
  std::string label;
  double ratio = 0.0;
  uint64_t seed = 0;
  double value = 0.0;
  double relative_drop = 0.0;  // vs the same config and seed at ratio 0
};

// Refits each config on noise-injected copies of the train matrix and tracks
// how the test metric degrades; rows come back grouped by config, then
// ratio, then seed.
std::vector<NoiseRow> run_noise(const SplitBundle& bundle,
                                const NoiseSpec& spec);

struct TimingRow {
  std::string label;
  double fit_seconds = 0.0;
  double score_seconds = 0.0;  // all test users, batched
  uint64_t scored_users = 0;
};

std::vector<TimingRow> run_timing(const SplitBundle& bundle,
                                  std::span<const SolverConfig> configs);

}  // namespace lare
