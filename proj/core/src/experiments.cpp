#include "lare/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "lare/error.hpp"
#include "lare/rng.hpp"

namespace lare {

uint32_t resolve_threads(uint32_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LARE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096)
      fail_usage("LARE_THREADS must be a positive integer, got '" +
                 std::string(env) + "'");
    return static_cast<uint32_t>(v);
  }
  return 1;
}

void parallel_for(uint64_t count, uint32_t threads,
                  const std::function<void(uint64_t)>& task) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count <= 1) {
    for (uint64_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<uint64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    while (true) {
      const uint64_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::scoped_lock lock(err_mutex);
        if (first_error) return;
      }
      try {
        task(i);
      } catch (...) {
        std::scoped_lock lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const uint32_t n_workers =
      static_cast<uint32_t>(std::min<uint64_t>(threads, count));
  pool.reserve(n_workers);
  for (uint32_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string SelectionMetric::label() const {
  return std::string(to_string(slice)) + "/" + metric + "@" +
         std::to_string(k);
}

std::vector<double> default_lambdas_normalized() {
  return {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2,
          0.5,  1.0,  2.0,  5.0,  10.0, 20.0, 50.0};
}

std::vector<double> default_lambdas_raw() {
  return {10, 20, 50, 100, 200, 500, 1000};
}

std::vector<SolverConfig> SweepSpec::expand() const {
  if (lambdas.empty()) fail_usage("sweep: lambda grid is empty");
  for (double l : lambdas)
    if (!(l > 0)) fail_usage("sweep: lambdas must be positive");

  std::vector<SolverConfig> out;
  auto push = [&](ModelKind m, const NormRecipe& r) {
    for (double l : lambdas) out.push_back({m, l, r, {}});
  };
  for (ModelKind m : models) {
    for (NormKind kind : recipes) {
      // The denoising ridge only composes with the raw gram; other pairs
      // are skipped rather than rejected so grids stay easy to write.
      if (m == ModelKind::DLAE && kind != NormKind::None) continue;
      switch (kind) {
        case NormKind::None:
        case NormKind::RW:
        case NormKind::Sym:
          push(m, {kind, 0, 0, 0});
          break;
        case NormKind::DAN:
          for (double a : alphas)
            for (double b : betas) push(m, NormRecipe::dan(a, b));
          break;
        case NormKind::UserOnly:
          for (double b : betas) push(m, NormRecipe::user_only(b));
          break;
        case NormKind::ItemOnly:
          for (double a : alphas) push(m, NormRecipe::item_only(a));
          break;
        case NormKind::ColumnWise:
          for (double g : gammas) push(m, NormRecipe::column_wise(g));
          break;
      }
    }
  }
  if (out.empty()) fail_usage("sweep: grid expanded to nothing");
  for (const auto& cfg : out) cfg.validate();
  return out;
}

SweepResult run_sweep(const SplitBundle& bundle, const SweepSpec& spec) {
  if (bundle.validation.empty())
    fail_usage("sweep needs a split with a validation set");
  const auto configs = spec.expand();
  const auto& degrees = bundle.train.item_degrees();

  SweepResult result;
  result.rows.resize(configs.size());
  parallel_for(configs.size(), spec.threads, [&](uint64_t i) {
    SweepRow& row = result.rows[i];
    row.config = configs[i];
    const ItemModel model = fit(bundle.train, configs[i]);
    row.validation = evaluate(model, bundle.validation, degrees, spec.eval);
    row.test = evaluate(model, bundle.test, degrees, spec.eval);
    row.selection_value = row.validation.get(
        spec.selection.slice, spec.selection.metric, spec.selection.k);
  });

  result.best = 0;
  for (size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].selection_value >
        result.rows[result.best].selection_value)
      result.best = i;
  return result;
}

std::vector<AblationRow> run_ablation(const SplitBundle& bundle,
                                      const AblationSpec& spec) {
  if (bundle.validation.empty())
    fail_usage("ablation needs a split with a validation set");
  if (spec.lambdas_raw.empty() || spec.lambdas_normalized.empty())
    fail_usage("ablation: both lambda grids must be non-empty");
  const auto& degrees = bundle.train.item_degrees();

  std::vector<AblationRow> rows;
  {
    AblationRow pop;
    pop.method = "mostpop";
    pop.selection_value =
        evaluate_most_popular(bundle.validation, degrees, spec.eval)
            .get(spec.selection.slice, spec.selection.metric, spec.selection.k);
    pop.test = evaluate_most_popular(bundle.test, degrees, spec.eval);
    rows.push_back(std::move(pop));
  }

  // Scale-mixed grams get the union of both ridge grids.
  std::vector<double> lambdas_mixed = spec.lambdas_raw;
  lambdas_mixed.insert(lambdas_mixed.end(), spec.lambdas_normalized.begin(),
                       spec.lambdas_normalized.end());
  std::sort(lambdas_mixed.begin(), lambdas_mixed.end());
  lambdas_mixed.erase(std::unique(lambdas_mixed.begin(), lambdas_mixed.end()),
                      lambdas_mixed.end());

  struct Family {
    const char* name;
    ModelKind model;
    NormKind recipe;
    const std::vector<double>* lambdas;
  };
  const Family families[] = {
      {"lae", ModelKind::LAE, NormKind::None, &spec.lambdas_raw},
      {"lae+colwise", ModelKind::LAE, NormKind::ColumnWise, &spec.lambdas_raw},
      {"lae+user", ModelKind::LAE, NormKind::UserOnly, &lambdas_mixed},
      {"lae+item", ModelKind::LAE, NormKind::ItemOnly, &lambdas_mixed},
      {"lae+rw", ModelKind::LAE, NormKind::RW, &spec.lambdas_normalized},
      {"lae+sym", ModelKind::LAE, NormKind::Sym, &spec.lambdas_normalized},
      {"lae+dan", ModelKind::LAE, NormKind::DAN, &spec.lambdas_normalized},
      {"dlae", ModelKind::DLAE, NormKind::None, &spec.lambdas_raw},
      {"ease", ModelKind::EASE, NormKind::None, &spec.lambdas_raw},
      {"ease+dan", ModelKind::EASE, NormKind::DAN, &spec.lambdas_normalized},
  };
  for (const Family& fam : families) {
    SweepSpec sub;
    sub.models = {fam.model};
    sub.recipes = {fam.recipe};
    sub.lambdas = *fam.lambdas;
    sub.alphas = spec.alphas;
    sub.betas = spec.betas;
    sub.gammas = spec.gammas;
    sub.selection = spec.selection;
    sub.eval = spec.eval;
    sub.threads = spec.threads;
    const SweepResult res = run_sweep(bundle, sub);
    AblationRow row;
    row.method = fam.name;
    row.config = res.rows[res.best].config;
    row.selection_value = res.rows[res.best].selection_value;
    row.test = res.rows[res.best].test;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<NoiseRow> run_noise(const SplitBundle& bundle,
                                const NoiseSpec& spec) {
  if (spec.configs.empty()) fail_usage("noise: no model configs given");
  if (spec.ratios.empty() || spec.seeds.empty())
    fail_usage("noise: ratios and seeds must be non-empty");
  for (double r : spec.ratios)
    if (r < 0 || r > 100) fail_usage("noise: ratios are percentages in [0, 100]");

  // Slice definitions and metric weighting stay anchored to the clean train
  // degrees; only the fit input is perturbed.
  const auto& degrees = bundle.train.item_degrees();

  struct Task {
    size_t config = 0;
    double ratio = 0;
    uint64_t seed = 0;
  };
  std::vector<Task> tasks;
  for (size_t c = 0; c < spec.configs.size(); ++c)
    for (double r : spec.ratios)
      for (uint64_t s : spec.seeds) tasks.push_back({c, r, s});

  std::vector<double> values(tasks.size());
  parallel_for(tasks.size(), spec.threads, [&](uint64_t i) {
    const Task& t = tasks[i];
    InteractionMatrix noisy =
        t.ratio == 0.0
            ? bundle.train
            : inject_noise(bundle.train,
                           {t.ratio, mix_seed(t.seed, static_cast<uint64_t>(
                                                          t.ratio * 100))});
    const ItemModel model = fit(noisy, spec.configs[t.config]);
    values[i] = evaluate(model, bundle.test, degrees, spec.eval)
                    .get(spec.metric.slice, spec.metric.metric, spec.metric.k);
  });

  // Baseline per (config, seed) is the ratio-0 value.
  std::vector<NoiseRow> rows(tasks.size());
  auto find_base = [&](size_t config, uint64_t seed) {
    for (size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].config == config && tasks[i].seed == seed &&
          tasks[i].ratio == 0.0)
        return values[i];
    fail_usage("noise: ratio grid must include 0 for relative drops");
  };
  for (size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    NoiseRow& row = rows[i];
    row.label = spec.configs[t.config].label();
    row.ratio = t.ratio;
    row.seed = t.seed;
    row.value = values[i];
    const double base = find_base(t.config, t.seed);
    row.relative_drop = base != 0.0 ? (base - values[i]) / base : 0.0;
  }
  return rows;
}

std::vector<TimingRow> run_timing(const SplitBundle& bundle,
                                  std::span<const SolverConfig> configs) {
  if (configs.empty()) fail_usage("timing: no model configs given");
  if (bundle.test.empty()) fail_usage("timing: split has no test users");
  std::vector<TimingRow> rows;
  constexpr size_t kBatch = 1024;
  for (const SolverConfig& cfg : configs) {
    TimingRow row;
    row.label = cfg.label();
    const ItemModel model = fit(bundle.train, cfg);
    row.fit_seconds = model.stats.fit_seconds;

    const size_t n_users = bundle.test.users.size();
    const uint32_t n = model.num_items;
    const auto t0 = std::chrono::steady_clock::now();
    double sink = 0;
    for (size_t start = 0; start < n_users; start += kBatch) {
      const size_t stop = std::min(n_users, start + kBatch);
      DenseMatrix foldins = DenseMatrix::Zero(stop - start, n);
      for (size_t u = start; u < stop; ++u)
        for (uint32_t i : bundle.test.foldin[u])
          foldins(static_cast<Eigen::Index>(u - start), i) = 1.0;
      DenseMatrix scores = foldins * model.b;
      sink += scores(0, 0);
    }
    row.score_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    row.scored_users = n_users;
    if (!std::isfinite(sink)) fail_numeric("timing: non-finite scores");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lare
