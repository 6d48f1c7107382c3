// lare: prepare implicit-feedback data, fit linear item-item models on
// rescaled co-occurrence, and run the evaluation/ablation loops around them.
//
// Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 I/O failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lare/analysis.hpp"
#include "lare/error.hpp"
#include "lare/evaluation.hpp"
#include "lare/experiments.hpp"
#include "lare/interactions.hpp"
#include "lare/models.hpp"
#include "lare/normalization.hpp"
#include "lare/synthetic.hpp"
#include "prepared_dir.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace lare;
using cli::PreparedData;

namespace {

constexpr const char* kToolVersion = "lare 0.1.0";

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt_hash(uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

using Fields = std::vector<std::pair<std::string, std::string>>;

// Every command that owns an output directory drops a manifest there. The
// manifest carries wall time and provenance; byte-stable payloads stay in the
// TSV files so reruns can be diffed directly.
void write_manifest(const fs::path& dir, const std::string& command,
                    const Fields& fields, double wall_seconds) {
  std::ofstream out(dir / "manifest.txt");
  if (!out) fail_io("cannot write manifest in " + dir.string());
  out << "command: " << command << '\n' << "tool: " << kToolVersion << '\n';
  for (const auto& [key, value] : fields) out << key << ": " << value << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", wall_seconds);
  out << "wall_seconds: " << buf << '\n';
  if (!out) fail_io("short write to manifest in " + dir.string());
}

void write_tsv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) fail_io("cannot open " + path.string() + " for writing");
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "\t" : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << '\n';
  }
  if (!out) fail_io("short write to " + path.string());
}

Slice slice_from_string(const std::string& s) {
  static const std::map<std::string, Slice> kMap = {
      {"aoa", Slice::AOA},           {"head", Slice::Head},
      {"tail", Slice::Tail},         {"unbiased", Slice::Unbiased},
      {"active", Slice::Active},     {"inactive", Slice::Inactive}};
  auto it = kMap.find(s);
  if (it == kMap.end()) fail_usage("unknown slice '" + s + "'");
  return it->second;
}

char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s == "comma") return ',';
  if (s == "space") return ' ';
  if (s.size() == 1) return s[0];
  fail_usage("delimiter must be tab, comma, space, or a single character");
}

// Shared --k/--head-fraction/... option block.
struct EvalOpts {
  std::vector<uint32_t> ks = {20};
  double head_fraction = 0.2;
  double active_fraction = 0.2;
  double propensity_gamma = 2.0;
  bool include_seen = false;

  EvalConfig to_config() const {
    EvalConfig cfg;
    cfg.k_list = ks;
    cfg.head_fraction = head_fraction;
    cfg.active_fraction = active_fraction;
    cfg.propensity_gamma = propensity_gamma;
    cfg.mask_seen = !include_seen;
    return cfg;
  }
};

void add_eval_opts(CLI::App* cmd, EvalOpts& o) {
  cmd->add_option("--k", o.ks, "ranking cutoffs")->delimiter(',');
  cmd->add_option("--head-fraction", o.head_fraction,
                  "item fraction forming the popular head");
  cmd->add_option("--active-fraction", o.active_fraction,
                  "user fraction forming the active slice");
  cmd->add_option("--propensity-gamma", o.propensity_gamma,
                  "popularity exponent behind the unbiased slice");
  cmd->add_flag("--include-seen", o.include_seen,
                "keep fold-in items rankable instead of masking them");
}

struct SelectOpts {
  std::string slice = "aoa";
  std::string metric = "ndcg";
  uint32_t k = 20;

  SelectionMetric to_metric() const {
    if (metric != "recall" && metric != "ndcg")
      fail_usage("selection metric must be recall or ndcg");
    return {slice_from_string(slice), metric, k};
  }
};

void add_select_opts(CLI::App* cmd, SelectOpts& o) {
  cmd->add_option("--select-slice", o.slice, "slice driving model selection");
  cmd->add_option("--select-metric", o.metric, "recall or ndcg");
  cmd->add_option("--select-k", o.k, "cutoff driving model selection");
}

// Makes sure the selection cutoff is actually evaluated.
EvalConfig eval_config_with(const EvalOpts& eval, const SelectOpts& sel) {
  EvalConfig cfg = eval.to_config();
  if (std::find(cfg.k_list.begin(), cfg.k_list.end(), sel.k) ==
      cfg.k_list.end())
    cfg.k_list.push_back(sel.k);
  return cfg;
}

void check_model_matches(const ItemModel& model,
                         const InteractionMatrix& train) {
  if (model.num_items != train.cols())
    fail_usage("model has " + std::to_string(model.num_items) +
               " items but the dataset has " + std::to_string(train.cols()));
  if (model.dataset_hash != train.content_hash())
    fail_usage("model was fit on different data (content hash mismatch)");
}

void print_report(const EvalReport& report) {
  std::printf("%-10s %-8s %-6s %-14s %s\n", "slice", "metric", "k", "value",
              "users");
  for (const EvalRow& row : report.rows)
    std::printf("%-10s %-8s %-6u %-14.6f %llu\n", to_string(row.slice),
                row.metric.c_str(), row.k, row.value,
                static_cast<unsigned long long>(row.n_users));
}

// --- synth ------------------------------------------------------------------

struct SynthCmd {
  SynthSpec spec;
  std::string out;

  void run() const {
    InteractionMatrix x = synthesize(spec);
    write_matrix(out, x);
    std::printf("wrote %s: %u users, %u items, %llu interactions (hash %s)\n",
                out.c_str(), x.rows(), x.cols(),
                static_cast<unsigned long long>(x.nnz()),
                fmt_hash(x.content_hash()).c_str());
  }
};

// --- prepare ----------------------------------------------------------------

struct PrepareCmd {
  std::string input, out;
  std::string delimiter = "tab";
  double rating_threshold = 0.0;
  uint32_t min_user_degree = 1, min_item_degree = 1;
  std::string protocol = "strong";
  std::vector<double> ratios = {0.8, 0.1, 0.1};
  double foldin = 0.8;
  uint64_t seed = 0;
  uint64_t homophily_sample = 0;  // 0 = exact

  void run() const {
    Timer timer;
    IngestResult base = load_events();

    InteractionMatrix matrix = std::move(base.matrix);
    std::vector<std::string> user_ids = std::move(base.user_ids);
    std::vector<std::string> item_ids = std::move(base.item_ids);
    uint32_t kcore_passes = 0;
    if (min_user_degree > 1 || min_item_degree > 1) {
      KCoreResult kc = k_core(matrix, min_user_degree, min_item_degree);
      user_ids = pick(user_ids, kc.kept_users);
      item_ids = pick(item_ids, kc.kept_items);
      matrix = std::move(kc.matrix);
      kcore_passes = kc.passes;
    }

    SplitConfig cfg;
    cfg.protocol = protocol_from_string(protocol);
    cfg.ratios = ratios;
    cfg.foldin_fraction = foldin;
    cfg.seed = seed;
    SplitBundle bundle = split(matrix, cfg);

    fs::create_directories(out);
    cli::save_prepared(out, bundle, user_ids, pick(item_ids, bundle.kept_items),
                       ratios, foldin);

    HomophilyConfig hcfg;
    if (homophily_sample > 0) hcfg.sample_pairs = homophily_sample;
    hcfg.seed = seed;
    DatasetStats stats = dataset_stats(matrix, hcfg);

    std::vector<std::vector<std::string>> rows = {
        {"users", std::to_string(stats.users)},
        {"items", std::to_string(stats.items)},
        {"interactions", std::to_string(stats.interactions)},
        {"density", fmt12(stats.density)},
        {"gini", fmt12(stats.gini)},
        {"homophily", fmt12(stats.homophily)},
        {"train_users", std::to_string(bundle.train.rows())},
        {"train_items", std::to_string(bundle.train.cols())},
        {"train_interactions", std::to_string(bundle.train.nnz())},
        {"validation_users", std::to_string(bundle.validation.users.size())},
        {"test_users", std::to_string(bundle.test.users.size())},
        {"skipped_eval_users", std::to_string(bundle.skipped_eval_users)}};
    write_tsv(fs::path(out) / "stats.tsv", {"metric", "value"}, rows);

    write_manifest(out, "prepare",
                   {{"input", input},
                    {"protocol", to_string(bundle.protocol)},
                    {"seed", std::to_string(seed)},
                    {"kcore_passes", std::to_string(kcore_passes)},
                    {"dataset_hash", fmt_hash(matrix.content_hash())},
                    {"train_hash", fmt_hash(bundle.train.content_hash())}},
                   timer.seconds());

    std::printf(
        "prepared %s: %u users, %u items, %llu interactions\n"
        "train %u x %u (%llu cells), validation %zu users, test %zu users, "
        "skipped %llu\n",
        out.c_str(), stats.users, stats.items,
        static_cast<unsigned long long>(stats.interactions),
        bundle.train.rows(), bundle.train.cols(),
        static_cast<unsigned long long>(bundle.train.nnz()),
        bundle.validation.users.size(), bundle.test.users.size(),
        static_cast<unsigned long long>(bundle.skipped_eval_users));
  }

 private:
  static std::vector<std::string> pick(const std::vector<std::string>& ids,
                                       const std::vector<uint32_t>& keep) {
    std::vector<std::string> picked;
    picked.reserve(keep.size());
    for (uint32_t idx : keep) picked.push_back(ids.at(idx));
    return picked;
  }

  // Event logs and the matrix text format share one entry point; the matrix
  // format is recognized by its magic and gets positional ids.
  IngestResult load_events() const {
    std::ifstream probe(input);
    if (!probe) fail_io("cannot open " + input);
    std::string magic(5, '\0');
    probe.read(magic.data(), 5);
    if (probe.gcount() == 5 && magic == "LAREX") {
      IngestResult r;
      r.matrix = read_matrix(input);
      for (uint32_t u = 0; u < r.matrix.rows(); ++u)
        r.user_ids.push_back(std::to_string(u));
      for (uint32_t i = 0; i < r.matrix.cols(); ++i)
        r.item_ids.push_back(std::to_string(i));
      r.lines_read = r.matrix.nnz();
      return r;
    }
    IngestConfig cfg;
    cfg.delimiter = parse_delimiter(delimiter);
    cfg.rating_threshold = rating_threshold;
    return ingest(input, cfg);
  }
};

// --- fit --------------------------------------------------------------------

struct FitCmd {
  std::string data, out;
  std::string model = "lae", recipe = "none";
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double dropout = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.0, beta = 0.0, gamma = 0.0;

  void run() const {
    Timer timer;
    SolverConfig cfg;
    cfg.model = model_kind_from_string(model);
    cfg.recipe.kind = norm_kind_from_string(recipe);
    cfg.recipe.alpha = alpha;
    cfg.recipe.beta = beta;
    cfg.recipe.gamma = gamma;
    if (!std::isnan(dropout)) cfg.dropout_p = dropout;
    if (std::isnan(lambda)) {
      if (!cfg.dropout_p) fail_usage("fit needs --lambda (or --dropout for dlae)");
      cfg.lambda = cfg.effective_lambda();
    } else {
      if (cfg.dropout_p) fail_usage("--lambda and --dropout are exclusive");
      cfg.lambda = lambda;
    }

    PreparedData prep = cli::load_prepared(data, false);
    ItemModel fitted = fit(prep.bundle.train, cfg);

    fs::create_directories(out);
    save_model(fs::path(out) / "model.bin", fitted);
    write_tsv(fs::path(out) / "fit.tsv",
              {"label", "model", "recipe", "lambda", "dropout", "users",
               "items", "dataset_hash", "residual", "residual_sampled"},
              {{fitted.config.label(), to_string(cfg.model),
                cfg.recipe.label(), fmt12(cfg.effective_lambda()),
                cfg.dropout_p ? fmt12(*cfg.dropout_p) : "none",
                std::to_string(fitted.num_users),
                std::to_string(fitted.num_items),
                fmt_hash(fitted.dataset_hash), fmt12(fitted.stats.residual),
                fitted.stats.residual_sampled ? "1" : "0"}});
    write_manifest(out, "fit",
                   {{"data", data},
                    {"config", fitted.config.label()},
                    {"dataset_hash", fmt_hash(fitted.dataset_hash)},
                    {"fit_seconds", fmt12(fitted.stats.fit_seconds)}},
                   timer.seconds());

    std::printf("fit %s on %u x %u in %.3fs, residual %.3g%s\n",
                fitted.config.label().c_str(), fitted.num_users,
                fitted.num_items, fitted.stats.fit_seconds,
                fitted.stats.residual,
                fitted.stats.residual_sampled ? " (sampled)" : "");
  }
};

// --- evaluate ---------------------------------------------------------------

struct EvaluateCmd {
  std::string data, model, split = "test", out;
  bool most_popular = false;
  EvalOpts eval;

  void run() const {
    Timer timer;
    if (split != "test" && split != "val")
      fail_usage("--split must be test or val");
    if (!most_popular && model.empty())
      fail_usage("evaluate needs --model (or --most-popular)");

    PreparedData prep = cli::load_prepared(data, split == "val");
    const EvalSplit& es =
        split == "val" ? prep.bundle.validation : prep.bundle.test;
    if (es.empty()) fail_usage("the " + split + " split has no users");
    const auto& degrees = prep.bundle.train.item_degrees();

    EvalConfig cfg = eval.to_config();
    std::string scored;
    EvalReport report;
    if (most_popular) {
      scored = "most-popular";
      report = evaluate_most_popular(es, degrees, cfg);
    } else {
      ItemModel m = load_model(model);
      check_model_matches(m, prep.bundle.train);
      scored = m.config.label();
      report = evaluate(m, es, degrees, cfg);
    }

    fs::create_directories(out);
    write_report(fs::path(out) / "report.tsv", report);
    write_manifest(out, "evaluate",
                   {{"data", data},
                    {"split", split},
                    {"scored", scored},
                    {"dataset_hash", fmt_hash(prep.bundle.train.content_hash())}},
                   timer.seconds());

    std::printf("%s on %s (%zu users)\n", scored.c_str(), split.c_str(),
                es.users.size());
    print_report(report);
  }
};

// --- analyze ----------------------------------------------------------------

struct AnalyzeCmd {
  std::string data, out, model;
  bool spectra = false;
  std::vector<double> betas = {0.0, 0.25, 0.5, 0.75, 1.0};
  double lambda = 1.0;
  double head_fraction = 0.2;
  uint64_t homophily_sample = 0;
  uint64_t seed = 0;
  bool plot = false;

  void run() const {
    Timer timer;
    PreparedData prep = cli::load_prepared(data, false);
    const InteractionMatrix& train = prep.bundle.train;

    fs::create_directories(out);
    HomophilyConfig hcfg;
    if (homophily_sample > 0) hcfg.sample_pairs = homophily_sample;
    hcfg.seed = seed;
    DatasetStats stats = dataset_stats(train, hcfg);
    write_tsv(fs::path(out) / "stats.tsv", {"metric", "value"},
              {{"users", std::to_string(stats.users)},
               {"items", std::to_string(stats.items)},
               {"interactions", std::to_string(stats.interactions)},
               {"density", fmt12(stats.density)},
               {"gini", fmt12(stats.gini)},
               {"homophily", fmt12(stats.homophily)}});

    Fields manifest_fields = {
        {"data", data},
        {"dataset_hash", fmt_hash(train.content_hash())}};

    if (spectra) {
      auto reports = spectrum_vs_beta(train, betas, lambda);
      std::vector<std::vector<std::string>> rows;
      std::vector<cli::Series> series;
      for (size_t b = 0; b < reports.size(); ++b) {
        cli::Series s;
        s.name = "beta=" + fmt12(betas[b]);
        for (size_t r = 0; r < reports[b].eigenvalues.size(); ++r) {
          rows.push_back({fmt12(betas[b]), std::to_string(r),
                          fmt12(reports[b].eigenvalues[r]),
                          reports[b].source});
          s.xs.push_back(static_cast<double>(r));
          s.ys.push_back(reports[b].eigenvalues[r]);
        }
        series.push_back(std::move(s));
      }
      write_tsv(fs::path(out) / "spectra.tsv",
                {"beta", "rank", "eigenvalue", "source"}, rows);
      if (plot)
        cli::write_line_chart(fs::path(out) / "spectra.svg",
                              "weight spectrum by user strength", "rank",
                              "eigenvalue", series);
      manifest_fields.push_back({"spectra_lambda", fmt12(lambda)});
    }

    if (!model.empty()) {
      ItemModel m = load_model(model);
      check_model_matches(m, train);
      WeightDistribution wd =
          weight_distribution(m, train.item_degrees(), head_fraction);
      std::vector<std::vector<std::string>> rows;
      for (uint32_t i = 0; i < wd.column_mass.size(); ++i)
        rows.push_back({std::to_string(i), prep.item_ids[i],
                        std::to_string(train.item_degrees()[i]),
                        wd.is_head[i] ? "head" : "tail",
                        fmt12(wd.column_mass[i])});
      write_tsv(fs::path(out) / "weights.tsv",
                {"item", "item_id", "degree", "bucket", "column_mass"}, rows);
      write_tsv(fs::path(out) / "weight_summary.tsv",
                {"bucket", "mean", "stddev", "count"},
                {{"head", fmt12(wd.head.mean), fmt12(wd.head.stddev),
                  std::to_string(wd.head.count)},
                 {"tail", fmt12(wd.tail.mean), fmt12(wd.tail.stddev),
                  std::to_string(wd.tail.count)}});
      manifest_fields.push_back({"model", m.config.label()});
    }

    write_manifest(out, "analyze", manifest_fields, timer.seconds());
    std::printf(
        "%u users, %u items, %llu interactions, density %.5f, gini %.4f, "
        "homophily %.4f\n",
        stats.users, stats.items,
        static_cast<unsigned long long>(stats.interactions), stats.density,
        stats.gini, stats.homophily);
  }
};

// --- sweep ------------------------------------------------------------------

struct SweepCmd {
  std::string data, out, config_file;
  std::vector<std::string> models = {"lae"};
  std::vector<std::string> recipes = {"dan"};
  std::vector<double> lambdas, alphas, betas, gammas;
  SelectOpts select;
  EvalOpts eval;
  uint32_t threads = 0;
  bool plot = false;

  void run() {
    Timer timer;
    if (!config_file.empty()) apply_config();

    SweepSpec spec;
    spec.models.clear();
    for (const auto& m : models) spec.models.push_back(model_kind_from_string(m));
    spec.recipes.clear();
    for (const auto& r : recipes) spec.recipes.push_back(norm_kind_from_string(r));
    spec.lambdas = lambdas.empty() ? default_lambda_grid(spec.recipes) : lambdas;
    if (!alphas.empty()) spec.alphas = alphas;
    if (!betas.empty()) spec.betas = betas;
    if (!gammas.empty()) spec.gammas = gammas;
    spec.selection = select.to_metric();
    spec.eval = eval_config_with(eval, select);
    spec.threads = threads;

    PreparedData prep = cli::load_prepared(data, true);
    SweepResult result = run_sweep(prep.bundle, spec);

    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < result.rows.size(); ++i) {
      const SweepRow& row = result.rows[i];
      const SolverConfig& c = row.config;
      rows.push_back(
          {to_string(c.model), to_string(c.recipe.kind), fmt12(c.recipe.alpha),
           fmt12(c.recipe.beta), fmt12(c.recipe.gamma),
           fmt12(c.effective_lambda()), c.label(), fmt12(row.selection_value),
           fmt12(row.test.get(spec.selection.slice, spec.selection.metric,
                              spec.selection.k)),
           i == result.best ? "1" : "0"});
    }
    fs::create_directories(out);
    write_tsv(fs::path(out) / "sweep.tsv",
              {"model", "recipe", "alpha", "beta", "gamma", "lambda", "label",
               "val_value", "test_value", "best"},
              rows);
    const SweepRow& best = result.rows[result.best];
    write_report(fs::path(out) / "best_report.tsv", best.test);
    write_manifest(out, "sweep",
                   {{"data", data},
                    {"dataset_hash",
                     fmt_hash(prep.bundle.train.content_hash())},
                    {"grid_points", std::to_string(result.rows.size())},
                    {"selection", spec.selection.label()},
                    {"threads", std::to_string(resolve_threads(threads))},
                    {"best", best.config.label()}},
                   timer.seconds());
    if (plot) write_plot(result, spec);

    std::printf("swept %zu configs; best %s: validation %s %.6f, test %.6f\n",
                result.rows.size(), best.config.label().c_str(),
                spec.selection.label().c_str(), best.selection_value,
                best.test.get(spec.selection.slice, spec.selection.metric,
                              spec.selection.k));
  }

 private:
  // A config file pins a whole sweep; any key present replaces the matching
  // command-line value.
  void apply_config() {
    std::ifstream in(config_file);
    if (!in) fail_io("cannot open " + config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      fail_usage("bad sweep config: " + std::string(e.what()));
    }
    if (!j.is_object()) fail_usage("sweep config must be a JSON object");
    static const std::set<std::string> kKnown = {
        "models", "recipes",         "lambdas",         "alphas",
        "betas",  "gammas",          "selection",       "k",
        "threads", "head_fraction",  "active_fraction", "propensity_gamma",
        "include_seen"};
    for (const auto& [key, value] : j.items())
      if (!kKnown.count(key)) fail_usage("unknown sweep config key '" + key + "'");
    try {
      if (j.contains("models")) models = j["models"].get<std::vector<std::string>>();
      if (j.contains("recipes")) recipes = j["recipes"].get<std::vector<std::string>>();
      if (j.contains("lambdas")) lambdas = j["lambdas"].get<std::vector<double>>();
      if (j.contains("alphas")) alphas = j["alphas"].get<std::vector<double>>();
      if (j.contains("betas")) betas = j["betas"].get<std::vector<double>>();
      if (j.contains("gammas")) gammas = j["gammas"].get<std::vector<double>>();
      if (j.contains("selection")) {
        const auto& s = j["selection"];
        if (s.contains("slice")) select.slice = s["slice"].get<std::string>();
        if (s.contains("metric")) select.metric = s["metric"].get<std::string>();
        if (s.contains("k")) select.k = s["k"].get<uint32_t>();
      }
      if (j.contains("k")) eval.ks = j["k"].get<std::vector<uint32_t>>();
      if (j.contains("head_fraction")) eval.head_fraction = j["head_fraction"].get<double>();
      if (j.contains("active_fraction")) eval.active_fraction = j["active_fraction"].get<double>();
      if (j.contains("propensity_gamma")) eval.propensity_gamma = j["propensity_gamma"].get<double>();
      if (j.contains("include_seen")) eval.include_seen = j["include_seen"].get<bool>();
      if (j.contains("threads")) threads = j["threads"].get<uint32_t>();
    } catch (const nlohmann::json::exception& e) {
      fail_usage("bad sweep config: " + std::string(e.what()));
    }
  }

  static std::vector<double> default_lambda_grid(
      const std::vector<NormKind>& kinds) {
    bool scaled = false, raw = false;
    for (NormKind kind : kinds)
      (NormRecipe{kind, 0, 0, 0}.scales_gram() ? scaled : raw) = true;
    std::set<double> grid;
    if (scaled)
      for (double l : default_lambdas_normalized()) grid.insert(l);
    if (raw)
      for (double l : default_lambdas_raw()) grid.insert(l);
    return {grid.begin(), grid.end()};
  }

  void write_plot(const SweepResult& result, const SweepSpec& spec) const {
    // One series per config family, ridge strength on the x axis.
    std::vector<cli::Series> series;
    std::map<std::string, size_t> index;
    for (const SweepRow& row : result.rows) {
      std::string label = row.config.label();
      label = label.substr(0, label.rfind('@'));
      auto [it, inserted] = index.try_emplace(label, series.size());
      if (inserted) series.push_back({label, {}, {}});
      series[it->second].xs.push_back(std::log10(row.config.effective_lambda()));
      series[it->second].ys.push_back(row.selection_value);
    }
    if (series.size() > 8) series.resize(8);
    cli::write_line_chart(fs::path(out) / "sweep.svg",
                          "validation " + spec.selection.label(),
                          "log10 ridge strength", "validation value", series);
  }
};

// --- ablate -----------------------------------------------------------------

struct AblateCmd {
  std::string data, out;
  std::vector<double> lambdas_raw, lambdas_normalized, alphas, betas, gammas;
  SelectOpts select;
  EvalOpts eval;
  uint32_t threads = 0;

  void run() const {
    Timer timer;
    AblationSpec spec;
    spec.lambdas_raw =
        lambdas_raw.empty() ? default_lambdas_raw() : lambdas_raw;
    spec.lambdas_normalized = lambdas_normalized.empty()
                                  ? default_lambdas_normalized()
                                  : lambdas_normalized;
    if (!alphas.empty()) spec.alphas = alphas;
    if (!betas.empty()) spec.betas = betas;
    if (!gammas.empty()) spec.gammas = gammas;
    spec.selection = select.to_metric();
    spec.eval = eval_config_with(eval, select);
    spec.threads = threads;

    PreparedData prep = cli::load_prepared(data, true);
    std::vector<AblationRow> rows = run_ablation(prep.bundle, spec);

    static const Slice kSlices[] = {Slice::AOA,      Slice::Head,
                                    Slice::Tail,     Slice::Unbiased,
                                    Slice::Active,   Slice::Inactive};
    std::vector<std::string> header = {"method", "config", "lambda",
                                       "val_value"};
    for (Slice s : kSlices)
      for (const char* metric : {"recall", "ndcg"})
        header.push_back(std::string("test_") + to_string(s) + "_" + metric);

    std::vector<std::vector<std::string>> table;
    for (const AblationRow& row : rows) {
      std::vector<std::string> cells = {
          row.method, row.config ? row.config->label() : "-",
          row.config ? fmt12(row.config->effective_lambda()) : "-",
          fmt12(row.selection_value)};
      for (Slice s : kSlices)
        for (const char* metric : {"recall", "ndcg"})
          cells.push_back(fmt12(row.test.get(s, metric, spec.selection.k)));
      table.push_back(std::move(cells));
    }
    fs::create_directories(out);
    write_tsv(fs::path(out) / "ablation.tsv", header, table);
    write_manifest(out, "ablate",
                   {{"data", data},
                    {"dataset_hash",
                     fmt_hash(prep.bundle.train.content_hash())},
                    {"selection", spec.selection.label()},
                    {"threads", std::to_string(resolve_threads(threads))}},
                   timer.seconds());

    std::printf("%-16s %-34s %10s %10s %10s\n", "method", "config",
                "val", "test aoa", "test tail");
    for (const AblationRow& row : rows)
      std::printf("%-16s %-34s %10.6f %10.6f %10.6f\n", row.method.c_str(),
                  row.config ? row.config->label().c_str() : "-",
                  row.selection_value,
                  row.test.get(Slice::AOA, spec.selection.metric,
                               spec.selection.k),
                  row.test.get(Slice::Tail, spec.selection.metric,
                               spec.selection.k));
  }
};

// --- noise ------------------------------------------------------------------

struct NoiseCmd {
  std::string data, out;
  double plain_lambda = 100.0;
  double dan_lambda = 1.0, dan_alpha = 0.5, dan_beta = 1.0;
  std::vector<double> ratios = {0, 2, 5, 10, 20};
  std::vector<uint64_t> seeds = {1, 2, 3};
  SelectOpts select;
  EvalOpts eval;
  uint32_t threads = 0;
  bool plot = false;

  void run() const {
    Timer timer;
    NoiseSpec spec;
    spec.ratios = ratios;
    spec.seeds = seeds;
    spec.configs = {
        SolverConfig{ModelKind::LAE, plain_lambda, NormRecipe::none(), {}},
        SolverConfig{ModelKind::LAE, dan_lambda,
                     NormRecipe::dan(dan_alpha, dan_beta), {}}};
    spec.metric = select.to_metric();
    spec.eval = eval_config_with(eval, select);
    spec.threads = threads;

    PreparedData prep = cli::load_prepared(data, false);
    std::vector<NoiseRow> rows = run_noise(prep.bundle, spec);

    std::vector<std::vector<std::string>> table;
    for (const NoiseRow& row : rows)
      table.push_back({row.label, fmt12(row.ratio), std::to_string(row.seed),
                       fmt12(row.value), fmt12(row.relative_drop)});
    fs::create_directories(out);
    write_tsv(fs::path(out) / "noise.tsv",
              {"label", "ratio", "seed", "value", "relative_drop"}, table);
    write_manifest(out, "noise",
                   {{"data", data},
                    {"dataset_hash",
                     fmt_hash(prep.bundle.train.content_hash())},
                    {"metric", spec.metric.label()},
                    {"threads", std::to_string(resolve_threads(threads))}},
                   timer.seconds());

    // label -> ratio -> mean value over seeds
    std::map<std::string, std::map<double, std::pair<double, int>>> agg;
    for (const NoiseRow& row : rows) {
      auto& cell = agg[row.label][row.ratio];
      cell.first += row.value;
      cell.second += 1;
    }
    std::vector<cli::Series> series;
    for (const auto& [label, by_ratio] : agg) {
      cli::Series s{label, {}, {}};
      for (const auto& [ratio, cell] : by_ratio) {
        s.xs.push_back(ratio);
        s.ys.push_back(cell.first / cell.second);
      }
      std::printf("%-34s", label.c_str());
      for (const auto& [ratio, cell] : by_ratio)
        std::printf("  %g%%: %.6f", ratio, cell.first / cell.second);
      std::printf("\n");
      series.push_back(std::move(s));
    }
    if (plot)
      cli::write_line_chart(fs::path(out) / "noise.svg",
                            "test " + spec.metric.label() +
                                " under interaction noise",
                            "noise percent", "test value", series);
  }
};

// --- timing -----------------------------------------------------------------

struct TimingCmd {
  std::string data, out;
  double plain_lambda = 100.0;
  double dan_lambda = 1.0, dan_alpha = 0.5, dan_beta = 1.0;

  void run() const {
    Timer timer;
    PreparedData prep = cli::load_prepared(data, false);
    std::vector<SolverConfig> configs = {
        SolverConfig{ModelKind::LAE, plain_lambda, NormRecipe::none(), {}},
        SolverConfig{ModelKind::LAE, dan_lambda,
                     NormRecipe::dan(dan_alpha, dan_beta), {}}};
    std::vector<TimingRow> rows = run_timing(prep.bundle, configs);

    std::vector<std::vector<std::string>> table;
    for (const TimingRow& row : rows)
      table.push_back({row.label, fmt12(row.fit_seconds),
                       fmt12(row.score_seconds),
                       std::to_string(row.scored_users)});
    fs::create_directories(out);
    write_tsv(fs::path(out) / "timing.tsv",
              {"label", "fit_seconds", "score_seconds", "scored_users"}, table);
    write_manifest(out, "timing",
                   {{"data", data},
                    {"dataset_hash",
                     fmt_hash(prep.bundle.train.content_hash())}},
                   timer.seconds());

    for (const TimingRow& row : rows)
      std::printf("%-34s fit %.3fs  score %.3fs (%llu users)\n",
                  row.label.c_str(), row.fit_seconds, row.score_seconds,
                  static_cast<unsigned long long>(row.scored_users));
    if (rows.size() >= 2 && rows[0].fit_seconds > 0)
      std::printf("fit overhead vs plain: %.3fx\n",
                  rows[1].fit_seconds / rows[0].fit_seconds);
  }
};

// --- topk -------------------------------------------------------------------

struct TopkCmd {
  std::string data, model, split = "test", out;
  uint32_t users = 10, k = 10;
  double head_fraction = 0.2;

  void run() const {
    Timer timer;
    if (split != "test" && split != "val")
      fail_usage("--split must be test or val");
    PreparedData prep = cli::load_prepared(data, split == "val");
    const EvalSplit& es =
        split == "val" ? prep.bundle.validation : prep.bundle.test;
    if (es.empty()) fail_usage("the " + split + " split has no users");

    ItemModel m = load_model(model);
    check_model_matches(m, prep.bundle.train);
    std::vector<uint8_t> head =
        head_mask(prep.bundle.train.item_degrees(), head_fraction);

    size_t n_users = std::min<size_t>(users, es.users.size());
    std::vector<std::vector<std::string>> table;
    for (size_t u = 0; u < n_users; ++u) {
      std::vector<double> scores = score(m, es.foldin[u]);
      std::vector<uint32_t> top = rank_topk(scores, k);
      uint32_t input_row = es.users[u];
      const std::string& user_id = input_row < prep.user_ids.size()
                                       ? prep.user_ids[input_row]
                                       : std::to_string(input_row);
      for (size_t r = 0; r < top.size(); ++r)
        table.push_back({std::to_string(input_row), user_id,
                         std::to_string(r + 1), std::to_string(top[r]),
                         prep.item_ids[top[r]], fmt12(scores[top[r]]),
                         head[top[r]] ? "head" : "tail"});
    }
    fs::create_directories(out);
    write_tsv(fs::path(out) / "topk.tsv",
              {"user", "user_id", "rank", "item", "item_id", "score", "bucket"},
              table);
    write_manifest(out, "topk",
                   {{"data", data},
                    {"split", split},
                    {"model", m.config.label()},
                    {"dataset_hash",
                     fmt_hash(prep.bundle.train.content_hash())}},
                   timer.seconds());
    std::printf("wrote top-%u lists for %zu %s users to %s\n", k, n_users,
                split.c_str(), (fs::path(out) / "topk.tsv").c_str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "linear item-item recommenders on degree-rescaled co-occurrence"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SynthCmd synth;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic implicit-feedback matrix");
  synth_cmd->add_option("--users", synth.spec.users, "user count");
  synth_cmd->add_option("--items", synth.spec.items, "item count");
  synth_cmd->add_option("--events", synth.spec.events, "target interaction count");
  synth_cmd->add_option("--clusters", synth.spec.clusters, "taste cluster count");
  synth_cmd->add_option("--skew", synth.spec.popularity_skew,
                        "popularity curve exponent");
  synth_cmd->add_option("--shift", synth.spec.popularity_shift,
                        "popularity curve offset");
  synth_cmd->add_option("--affinity", synth.spec.affinity,
                        "probability of drawing inside taste clusters");
  synth_cmd->add_option("--min-degree", synth.spec.min_degree,
                        "per-user interaction floor");
  synth_cmd->add_option("--log-sigma", synth.spec.log_sigma,
                        "user degree lognormal spread");
  synth_cmd->add_option("--seed", synth.spec.seed, "generator seed");
  synth_cmd->add_option("--out", synth.out, "output matrix file")->required();
  synth_cmd->callback([&] { synth.run(); });

  PrepareCmd prepare;
  auto* prepare_cmd = app.add_subcommand(
      "prepare", "ingest events, prune, and write train/eval splits");
  prepare_cmd->add_option("--input", prepare.input, "event log or matrix file")
      ->required();
  prepare_cmd->add_option("--delimiter", prepare.delimiter,
                          "event field separator (tab, comma, space, or one char)");
  prepare_cmd->add_option("--rating-threshold", prepare.rating_threshold,
                          "drop events whose rating falls below this");
  prepare_cmd->add_option("--min-user-degree", prepare.min_user_degree,
                          "k-core floor on user interactions");
  prepare_cmd->add_option("--min-item-degree", prepare.min_item_degree,
                          "k-core floor on item interactions");
  prepare_cmd->add_option("--protocol", prepare.protocol, "strong or weak");
  prepare_cmd->add_option("--ratios", prepare.ratios,
                          "train/val/test fractions (two or three)")
      ->delimiter(',');
  prepare_cmd->add_option("--foldin", prepare.foldin,
                          "revealed fraction per eval user (strong protocol)");
  prepare_cmd->add_option("--seed", prepare.seed, "split seed");
  prepare_cmd->add_option("--homophily-sample", prepare.homophily_sample,
                          "pair sample size for the homophily stat (0 = exact)");
  prepare_cmd->add_option("--out", prepare.out, "output directory")->required();
  prepare_cmd->callback([&] { prepare.run(); });

  FitCmd fit_opts;
  auto* fit_cmd =
      app.add_subcommand("fit", "fit an item-item model on a prepared dataset");
  fit_cmd->add_option("--data", fit_opts.data, "prepared dataset directory")
      ->required();
  fit_cmd->add_option("--model", fit_opts.model, "lae, ease, or dlae");
  fit_cmd->add_option("--lambda", fit_opts.lambda, "ridge strength");
  fit_cmd->add_option("--dropout", fit_opts.dropout,
                      "dlae dropout rate, sets lambda = p / (1 - p)");
  fit_cmd->add_option("--recipe", fit_opts.recipe,
                      "none, rw, sym, dan, user, item, or colwise");
  fit_cmd->add_option("--alpha", fit_opts.alpha, "item split (dan, item)");
  fit_cmd->add_option("--beta", fit_opts.beta, "user strength (dan, user)");
  fit_cmd->add_option("--gamma", fit_opts.gamma, "column rescale power (colwise)");
  fit_cmd->add_option("--out", fit_opts.out, "output directory")->required();
  fit_cmd->callback([&] { fit_opts.run(); });

  EvaluateCmd evaluate_opts;
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "rank held-out items and report sliced recall/ndcg");
  evaluate_cmd
      ->add_option("--data", evaluate_opts.data, "prepared dataset directory")
      ->required();
  evaluate_cmd->add_option("--model", evaluate_opts.model, "fitted model file");
  evaluate_cmd->add_flag("--most-popular", evaluate_opts.most_popular,
                         "score the popularity baseline instead of a model");
  evaluate_cmd->add_option("--split", evaluate_opts.split, "test or val");
  add_eval_opts(evaluate_cmd, evaluate_opts.eval);
  evaluate_cmd->add_option("--out", evaluate_opts.out, "output directory")
      ->required();
  evaluate_cmd->callback([&] { evaluate_opts.run(); });

  AnalyzeCmd analyze;
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "dataset statistics, weight spectra, and weight mass");
  analyze_cmd->add_option("--data", analyze.data, "prepared dataset directory")
      ->required();
  analyze_cmd->add_flag("--spectra", analyze.spectra,
                        "decompose the ridge weights across user strengths");
  analyze_cmd->add_option("--betas", analyze.betas, "user strengths to span")
      ->delimiter(',');
  analyze_cmd->add_option("--lambda", analyze.lambda,
                          "ridge strength behind the spectra");
  analyze_cmd->add_option("--model", analyze.model,
                          "fitted model file for weight mass analysis");
  analyze_cmd->add_option("--head-fraction", analyze.head_fraction,
                          "item fraction forming the popular head");
  analyze_cmd->add_option("--homophily-sample", analyze.homophily_sample,
                          "pair sample size for the homophily stat (0 = exact)");
  analyze_cmd->add_option("--seed", analyze.seed, "sampling seed");
  analyze_cmd->add_flag("--plot", analyze.plot, "write spectra.svg");
  analyze_cmd->add_option("--out", analyze.out, "output directory")->required();
  analyze_cmd->callback([&] { analyze.run(); });

  SweepCmd sweep;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "grid-search configs, select on validation, report on test");
  sweep_cmd->add_option("--data", sweep.data, "prepared dataset directory")
      ->required();
  sweep_cmd->add_option("--config", sweep.config_file,
                        "JSON sweep spec; overrides the flags below");
  sweep_cmd->add_option("--models", sweep.models, "model kinds")->delimiter(',');
  sweep_cmd->add_option("--recipes", sweep.recipes, "gram recipes")
      ->delimiter(',');
  sweep_cmd->add_option("--lambdas", sweep.lambdas, "ridge grid")->delimiter(',');
  sweep_cmd->add_option("--alphas", sweep.alphas, "item split grid")
      ->delimiter(',');
  sweep_cmd->add_option("--betas", sweep.betas, "user strength grid")
      ->delimiter(',');
  sweep_cmd->add_option("--gammas", sweep.gammas, "column rescale grid")
      ->delimiter(',');
  add_select_opts(sweep_cmd, sweep.select);
  add_eval_opts(sweep_cmd, sweep.eval);
  sweep_cmd->add_option("--threads", sweep.threads,
                        "fit workers (default LARE_THREADS or 1)");
  sweep_cmd->add_flag("--plot", sweep.plot, "write sweep.svg");
  sweep_cmd->add_option("--out", sweep.out, "output directory")->required();
  sweep_cmd->callback([&] { sweep.run(); });

  AblateCmd ablate;
  auto* ablate_cmd = app.add_subcommand(
      "ablate", "tune each model family on validation and compare on test");
  ablate_cmd->add_option("--data", ablate.data, "prepared dataset directory")
      ->required();
  ablate_cmd->add_option("--lambdas-raw", ablate.lambdas_raw,
                         "ridge grid for raw-gram families")
      ->delimiter(',');
  ablate_cmd->add_option("--lambdas-normalized", ablate.lambdas_normalized,
                         "ridge grid for rescaled-gram families")
      ->delimiter(',');
  ablate_cmd->add_option("--alphas", ablate.alphas, "item split grid")
      ->delimiter(',');
  ablate_cmd->add_option("--betas", ablate.betas, "user strength grid")
      ->delimiter(',');
  ablate_cmd->add_option("--gammas", ablate.gammas, "column rescale grid")
      ->delimiter(',');
  add_select_opts(ablate_cmd, ablate.select);
  add_eval_opts(ablate_cmd, ablate.eval);
  ablate_cmd->add_option("--threads", ablate.threads,
                         "fit workers (default LARE_THREADS or 1)");
  ablate_cmd->add_option("--out", ablate.out, "output directory")->required();
  ablate_cmd->callback([&] { ablate.run(); });

  NoiseCmd noise;
  auto* noise_cmd = app.add_subcommand(
      "noise", "track metric decay as train interactions are perturbed");
  noise_cmd->add_option("--data", noise.data, "prepared dataset directory")
      ->required();
  noise_cmd->add_option("--plain-lambda", noise.plain_lambda,
                        "ridge strength for the raw-gram model");
  noise_cmd->add_option("--dan-lambda", noise.dan_lambda,
                        "ridge strength for the rescaled model");
  noise_cmd->add_option("--dan-alpha", noise.dan_alpha, "item split");
  noise_cmd->add_option("--dan-beta", noise.dan_beta, "user strength");
  noise_cmd->add_option("--ratios", noise.ratios, "noise percentages")
      ->delimiter(',');
  noise_cmd->add_option("--noise-seeds", noise.seeds, "perturbation seeds")
      ->delimiter(',');
  add_select_opts(noise_cmd, noise.select);
  add_eval_opts(noise_cmd, noise.eval);
  noise_cmd->add_option("--threads", noise.threads,
                        "fit workers (default LARE_THREADS or 1)");
  noise_cmd->add_flag("--plot", noise.plot, "write noise.svg");
  noise_cmd->add_option("--out", noise.out, "output directory")->required();
  noise_cmd->callback([&] { noise.run(); });

  TimingCmd timing;
  auto* timing_cmd = app.add_subcommand(
      "timing", "fit and scoring wall time for plain vs rescaled models");
  timing_cmd->add_option("--data", timing.data, "prepared dataset directory")
      ->required();
  timing_cmd->add_option("--plain-lambda", timing.plain_lambda,
                         "ridge strength for the raw-gram model");
  timing_cmd->add_option("--dan-lambda", timing.dan_lambda,
                         "ridge strength for the rescaled model");
  timing_cmd->add_option("--dan-alpha", timing.dan_alpha, "item split");
  timing_cmd->add_option("--dan-beta", timing.dan_beta, "user strength");
  timing_cmd->add_option("--out", timing.out, "output directory")->required();
  timing_cmd->callback([&] { timing.run(); });

  TopkCmd topk;
  auto* topk_cmd = app.add_subcommand(
      "topk", "write the top ranked items for a few evaluation users");
  topk_cmd->add_option("--data", topk.data, "prepared dataset directory")
      ->required();
  topk_cmd->add_option("--model", topk.model, "fitted model file")->required();
  topk_cmd->add_option("--split", topk.split, "test or val");
  topk_cmd->add_option("--users", topk.users, "number of users to list");
  topk_cmd->add_option("--topk", topk.k, "list length per user");
  topk_cmd->add_option("--head-fraction", topk.head_fraction,
                       "item fraction forming the popular head");
  topk_cmd->add_option("--out", topk.out, "output directory")->required();
  topk_cmd->callback([&] { topk.run(); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "lare: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "lare: internal error: " << e.what() << '\n';
    return 3;
  }
}
