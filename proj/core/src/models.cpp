#include "lare/models.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lare/error.hpp"

namespace lare {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LAE: return "lae";
    case ModelKind::EASE: return "ease";
    case ModelKind::DLAE: return "dlae";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lae") return ModelKind::LAE;
  if (s == "ease") return ModelKind::EASE;
  if (s == "dlae") return ModelKind::DLAE;
  fail_usage("unknown model '" + s + "' (expected lae|ease|dlae)");
}

double SolverConfig::effective_lambda() const {
  if (dropout_p) return *dropout_p / (1.0 - *dropout_p);
  return lambda;
}

double SolverConfig::effective_dropout() const {
  const double l = effective_lambda();
  return l / (1.0 + l);
}

void SolverConfig::validate() const {
  recipe.validate();
  if (dropout_p) {
    if (model != ModelKind::DLAE)
      fail_usage("dropout rate is only meaningful for dlae");
    if (*dropout_p <= 0.0 || *dropout_p >= 1.0)
      fail_usage("dropout rate must lie in (0, 1)");
  }
  if (!(effective_lambda() > 0.0) || !std::isfinite(effective_lambda()))
    fail_usage("ridge strength must be positive and finite");
  // The dropout reading of dlae's ridge assumes raw co-occurrence counts;
  // combining it with a rescaled gram is rejected rather than silently
  // reinterpreted.
  if (model == ModelKind::DLAE && recipe.kind != NormKind::None)
    fail_usage("dlae only supports the unnormalized gram");
}

std::string SolverConfig::label() const {
  char buf[64];
  std::string s = to_string(model);
  if (recipe.kind != NormKind::None) s += "+" + recipe.label();
  std::snprintf(buf, sizeof buf, "@%g", effective_lambda());
  s += buf;
  if (dropout_p) {
    std::snprintf(buf, sizeof buf, "[p=%g]", *dropout_p);
    s += buf;
  }
  return s;
}

namespace {

// Gram exponents (src, tgt, user) for a recipe, in
// D^{-src} (X^T D_U^{-user} X) D^{-tgt} form.
struct GramExponents {
  double src = 0, tgt = 0, user = 0;
};

GramExponents recipe_exponents(const NormRecipe& r) {
  switch (r.kind) {
    case NormKind::RW: return {1.0, 0.0, 1.0};
    case NormKind::Sym: return {0.5, 0.5, 1.0};
    case NormKind::DAN: return {1.0 - r.alpha, r.alpha, r.beta};
    case NormKind::UserOnly: return {0.0, 0.0, r.beta};
    case NormKind::ItemOnly: return {1.0 - r.alpha, r.alpha, 0.0};
    default: return {};
  }
}

std::vector<double> degree_pow(const std::vector<uint32_t>& deg, double e) {
  std::vector<double> out(deg.size());
  for (size_t i = 0; i < deg.size(); ++i)
    out[i] = std::pow(static_cast<double>(deg[i]), e);
  return out;
}

// Frobenius norm of (a p_part + ridge part) b - p over a column subset.
double residual_norm(const DenseMatrix& a, const DenseMatrix& b,
                     const DenseMatrix& p, std::span<const Eigen::Index> cols,
                     bool zero_diagonal) {
  double num = 0, den = 0;
  for (Eigen::Index j : cols) {
    DenseVector r = a * b.col(j) - p.col(j);
    if (zero_diagonal) r(j) = 0.0;
    num += r.squaredNorm();
    den += p.col(j).squaredNorm();
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

ItemModel fit(const InteractionMatrix& x, const SolverConfig& cfg,
              uint32_t dense_cap) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = cfg.effective_lambda();
  const uint32_t n = x.cols();
  const auto exps = recipe_exponents(cfg.recipe);

  // An asymmetric item split (src != tgt) is a diagonal similarity of the
  // half-split form, so the positive definite midpoint system is factorized
  // once and the weights conjugated back afterwards.
  const double mid = 0.5 * (exps.src + exps.tgt);
  const double delta = 0.5 * (exps.tgt - exps.src);
  DenseMatrix s = cfg.recipe.scales_gram()
                      ? degree_power_gram(x, mid, mid, exps.user, dense_cap)
                      : gram(x, {}, dense_cap);

  DenseMatrix a = s;
  if (cfg.model == ModelKind::DLAE)
    a.diagonal() += lambda * s.diagonal();
  else
    a.diagonal().array() += lambda;

  DenseMatrix c = spd_inverse(a);

  ItemModel model;
  switch (cfg.model) {
    case ModelKind::LAE:
      model.b = -lambda * c;
      model.b.diagonal().array() += 1.0;
      break;
    case ModelKind::DLAE: {
      model.b = -lambda * c;
      for (uint32_t j = 0; j < n; ++j) model.b.col(j) *= s(j, j);
      model.b.diagonal().array() += 1.0;
      break;
    }
    case ModelKind::EASE: {
      model.b = -c;
      for (uint32_t j = 0; j < n; ++j) model.b.col(j) /= c(j, j);
      model.b.diagonal().setZero();
      break;
    }
  }

  if (delta != 0.0) {
    const auto up = degree_pow(x.item_degrees(), delta);
    const auto down = degree_pow(x.item_degrees(), -delta);
    for (uint32_t i = 0; i < n; ++i) model.b.row(i) *= up[i];
    for (uint32_t j = 0; j < n; ++j) model.b.col(j) *= down[j];
  }

  // Residual is measured against the actual (possibly asymmetric) system,
  // not the midpoint one the solver used.
  {
    DenseMatrix p_storage;
    if (delta != 0.0)
      p_storage = degree_power_gram(x, exps.src, exps.tgt, exps.user, dense_cap);
    const DenseMatrix& p_actual = delta == 0.0 ? s : p_storage;
    DenseMatrix a_actual = p_actual;
    if (cfg.model == ModelKind::DLAE)
      a_actual.diagonal() += lambda * p_actual.diagonal();
    else
      a_actual.diagonal().array() += lambda;
    std::vector<Eigen::Index> cols;
    if (n <= 512) {
      for (uint32_t j = 0; j < n; ++j) cols.push_back(j);
    } else {
      model.stats.residual_sampled = true;
      for (uint32_t k = 0; k < 64; ++k)
        cols.push_back(static_cast<Eigen::Index>(
            static_cast<uint64_t>(k) * n / 64));
    }
    model.stats.residual = residual_norm(a_actual, model.b, p_actual, cols,
                                         cfg.model == ModelKind::EASE);
  }

  if (cfg.recipe.kind == NormKind::ColumnWise && cfg.recipe.gamma != 0.0) {
    const auto scale = degree_pow(x.item_degrees(), -cfg.recipe.gamma);
    for (uint32_t j = 0; j < n; ++j) model.b.col(j) *= scale[j];
  }

  model.config = cfg;
  model.num_users = x.rows();
  model.num_items = n;
  model.dataset_hash = x.content_hash();
  model.stats.fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return model;
}

ItemModel fit_lae(const InteractionMatrix& x, double lambda,
                  const NormRecipe& recipe) {
  return fit(x, {ModelKind::LAE, lambda, recipe, {}});
}

ItemModel fit_ease(const InteractionMatrix& x, double lambda,
                   const NormRecipe& recipe) {
  return fit(x, {ModelKind::EASE, lambda, recipe, {}});
}

ItemModel fit_dlae(const InteractionMatrix& x, double lambda) {
  return fit(x, {ModelKind::DLAE, lambda, {}, {}});
}

ItemModel fit_dlae_dropout(const InteractionMatrix& x, double dropout_p) {
  return fit(x, {ModelKind::DLAE, 0.0, {}, dropout_p});
}

std::pair<DenseMatrix, DenseMatrix> item_scaling_identity(
    const InteractionMatrix& x, double alpha, double lambda) {
  DenseMatrix lhs = fit_lae(x, lambda, NormRecipe::item_only(alpha)).b;
  DenseMatrix rhs = fit_dlae(x, lambda).b;
  const auto up = degree_pow(x.item_degrees(), alpha);
  const auto down = degree_pow(x.item_degrees(), -alpha);
  for (uint32_t i = 0; i < x.cols(); ++i) rhs.row(i) *= up[i];
  for (uint32_t j = 0; j < x.cols(); ++j) rhs.col(j) *= down[j];
  return {std::move(lhs), std::move(rhs)};
}

std::vector<double> score(const ItemModel& model,
                          std::span<const uint32_t> foldin, bool mask_seen) {
  const uint32_t n = model.num_items;
  DenseVector s = DenseVector::Zero(n);
  for (uint32_t i : foldin) {
    if (i >= n) fail_usage("score: fold-in item index out of range");
    s += model.b.row(i).transpose();
  }
  std::vector<double> out(s.data(), s.data() + n);
  if (mask_seen)
    for (uint32_t i : foldin) out[i] = kMaskSentinel;
  return out;
}

// --- persistence ------------------------------------------------------------

void save_model(const std::filesystem::path& path, const ItemModel& model) {
  save_dense(path, model.b);
  std::ofstream meta(path.string() + ".meta");
  if (!meta) fail_io("cannot write model metadata: " + path.string() + ".meta");
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  meta << "kind: " << to_string(model.config.model) << '\n';
  meta << "lambda: " << num(model.config.lambda) << '\n';
  meta << "dropout_p: "
       << (model.config.dropout_p ? num(*model.config.dropout_p)
                                  : std::string("none"))
       << '\n';
  meta << "recipe: " << to_string(model.config.recipe.kind) << '\n';
  meta << "alpha: " << num(model.config.recipe.alpha) << '\n';
  meta << "beta: " << num(model.config.recipe.beta) << '\n';
  meta << "gamma: " << num(model.config.recipe.gamma) << '\n';
  meta << "rows: " << model.num_users << '\n';
  meta << "cols: " << model.num_items << '\n';
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(model.dataset_hash));
  meta << "dataset_hash: " << buf << '\n';
  meta << "fit_seconds: " << num(model.stats.fit_seconds) << '\n';
  meta << "residual: " << num(model.stats.residual) << '\n';
  meta << "residual_sampled: " << (model.stats.residual_sampled ? 1 : 0)
       << '\n';
  if (!meta) fail_io("short write to model metadata: " + path.string() + ".meta");
}

ItemModel load_model(const std::filesystem::path& path) {
  const std::string meta_path = path.string() + ".meta";
  std::ifstream meta(meta_path);
  if (!meta) fail_io("cannot open model metadata: " + meta_path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    auto colon = line.find(": ");
    if (colon == std::string::npos)
      fail_io("malformed model metadata line: " + line);
    kv[line.substr(0, colon)] = line.substr(colon + 2);
  }
  auto want = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail_io("model metadata missing key: " + key);
    return it->second;
  };
  auto want_num = [&](const std::string& key) {
    const std::string& v = want(key);
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      fail_io("model metadata key " + key + " is not numeric: " + v);
    }
  };

  ItemModel model;
  model.config.model = model_kind_from_string(want("kind"));
  model.config.lambda = want_num("lambda");
  if (want("dropout_p") != "none") model.config.dropout_p = want_num("dropout_p");
  model.config.recipe.kind = norm_kind_from_string(want("recipe"));
  model.config.recipe.alpha = want_num("alpha");
  model.config.recipe.beta = want_num("beta");
  model.config.recipe.gamma = want_num("gamma");
  model.num_users = static_cast<uint32_t>(want_num("rows"));
  model.num_items = static_cast<uint32_t>(want_num("cols"));
  model.dataset_hash = std::stoull(want("dataset_hash"), nullptr, 16);
  model.stats.fit_seconds = want_num("fit_seconds");
  model.stats.residual = want_num("residual");
  model.stats.residual_sampled = want("residual_sampled") == "1";
  model.config.validate();

  model.b = load_dense(path);
  if (model.b.rows() != model.num_items || model.b.cols() != model.num_items)
    fail_io("model weight shape disagrees with metadata: " + path.string());
  return model;
}

}  // namespace lare
