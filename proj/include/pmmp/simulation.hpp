#pragma once

// Simulation designs with three categorical predictors (4, 5, 6 categories),
// one N(0,1) continuous predictor, and all main effects plus 2- and 3-way
// interactions, together with replicated PMMP-vs-shrinkage comparisons and the
// MSE relative-bias study.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pmmp/enet.hpp"
#include "pmmp/mse.hpp"

namespace pmmp::sim {

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { Design = 1, Coefficients = 2, Noise = 3, CrossValidation = 4 };

/// Independent per-(stream, replicate) seed derived from the root seed by counter.
inline std::uint64_t stream_seed(std::uint64_t root, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

// ---------------------------------------------------------------------------
// Configuration

enum class ScenarioKind { Sparse, Dense, VariantA, VariantB, VariantC, VariantD };
enum class StudyKind { Comparison, RelativeBias };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Sparse: return "sparse";
    case ScenarioKind::Dense: return "dense";
    case ScenarioKind::VariantA: return "variant-a";
    case ScenarioKind::VariantB: return "variant-b";
    case ScenarioKind::VariantC: return "variant-c";
    case ScenarioKind::VariantD: return "variant-d";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  for (auto k : {ScenarioKind::Sparse, ScenarioKind::Dense, ScenarioKind::VariantA, ScenarioKind::VariantB,
                 ScenarioKind::VariantC, ScenarioKind::VariantD}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown scenario kind '" + s + "'");
}

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Dense;
  StudyKind study = StudyKind::Comparison;
  Index n = 30;
  double sigma = 1.0;
  int n_sim = 200;
  std::uint64_t seed = 12345;
  bool redraw_coefficients = true;  // Uniform(0,1) draws per replicate; false keeps replicate 0's draw
  bool fixed_design = false;        // reuse one (x, c) design across replicates
  bool baselines = true;            // lasso and elastic net alongside PMMP
  int cv_folds = 10;
  std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  FitConfig fit;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (n < 2) throw ConfigError("scenario needs N >= 2");
    if (n_sim < 1) throw ConfigError("scenario needs n_sim >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and nonnegative");
    if (baselines && n < cv_folds) throw ConfigError("N must be at least the number of CV folds");
    if (alpha_grid.empty()) throw ConfigError("empty alpha grid");
    for (double a : alpha_grid) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha grid values must lie in [0, 1]");
    }
    if (!(fit.delta > 0.0)) throw ConfigError("delta must be positive");
  }
};

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"study", c.study == StudyKind::Comparison ? "comparison" : "rb"},
          {"n", c.n},
          {"sigma", c.sigma},
          {"n_sim", c.n_sim},
          {"seed", c.seed},
          {"coefficients", c.redraw_coefficients ? "redraw" : "fixed"},
          {"fixed_design", c.fixed_design},
          {"baselines", c.baselines},
          {"folds", c.cv_folds},
          {"alpha_grid", c.alpha_grid},
          {"delta", c.fit.delta},
          {"extra_iterations", c.fit.extra_iterations},
          {"threads", c.threads}};
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  static const std::set<std::string> known{"kind",     "study", "n",          "sigma",      "n_sim",            "seed",   "coefficients",
                                           "fixed_design", "baselines", "folds", "alpha_grid", "delta", "extra_iterations", "threads"};
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown scenario key '" + key + "'");
  }
  try {
    c.kind = scenario_kind_from_string(j.value("kind", std::string("dense")));
    const auto study = j.value("study", std::string("comparison"));
    if (study == "comparison") {
      c.study = StudyKind::Comparison;
    } else if (study == "rb") {
      c.study = StudyKind::RelativeBias;
    } else {
      throw ConfigError("unknown study '" + study + "'");
    }
    c.n = j.value("n", c.n);
    c.sigma = j.value("sigma", c.sigma);
    c.n_sim = j.value("n_sim", c.n_sim);
    c.seed = j.value("seed", c.seed);
    const auto coef = j.value("coefficients", std::string("redraw"));
    if (coef != "redraw" && coef != "fixed") throw ConfigError("coefficients must be 'redraw' or 'fixed'");
    c.redraw_coefficients = coef == "redraw";
    c.fixed_design = j.value("fixed_design", c.study == StudyKind::RelativeBias);
    c.baselines = j.value("baselines", c.study == StudyKind::Comparison);
    c.cv_folds = j.value("folds", c.cv_folds);
    if (j.contains("alpha_grid")) c.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    c.fit.delta = j.value("delta", c.fit.delta);
    c.fit.extra_iterations = j.value("extra_iterations", 0);
    c.threads = j.value("threads", 0u);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Generators

inline const std::array<std::vector<double>, 3>& category_probabilities() {
  static const std::array<std::vector<double>, 3> probs{
      std::vector<double>{0.2, 0.3, 0.3, 0.2},
      std::vector<double>{1.0 / 12, 1.0 / 4, 1.0 / 3, 1.0 / 4, 1.0 / 12},
      std::vector<double>{1.0 / 12, 1.0 / 6, 1.0 / 4, 1.0 / 4, 1.0 / 6, 1.0 / 12}};
  return probs;
}

/// Which of c1, c2, c3 a scenario keeps.
inline std::vector<int> scenario_variables(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::VariantA: return {1, 2};
    case ScenarioKind::VariantB: return {0, 2};
    case ScenarioKind::VariantC: return {0, 1};
    case ScenarioKind::VariantD: return {2};
    default: return {0, 1, 2};
  }
}

inline DataSchema scenario_schema(ScenarioKind k) {
  DataSchema s;
  s.response = "y";
  s.continuous = {"x"};
  const auto& probs = category_probabilities();
  for (int v : scenario_variables(k)) {
    CategoricalVariable var;
    var.name = "c" + std::to_string(v + 1);
    for (std::size_t l = 0; l < probs[static_cast<std::size_t>(v)].size(); ++l) var.levels.push_back(std::to_string(l + 1));
    var.reference = 0;
    s.categorical.variables.push_back(std::move(var));
  }
  // Full model keeps 2- and 3-way interactions; each variant keeps its single 2-way interaction.
  s.categorical.interactions = all_interactions(s.categorical.q1(), 3);
  return s;
}

/// The fixed block-sparse coefficient vector: 29 twos, 30 zeros, 30 twos, 30 zeros.
inline std::vector<double> sparse_coefficients() {
  std::vector<double> a;
  a.insert(a.end(), 29, 2.0);
  a.insert(a.end(), 30, 0.0);
  a.insert(a.end(), 30, 2.0);
  a.insert(a.end(), 30, 0.0);
  return a;
}

struct Replicate {
  Dataset data;
  TrueModel truth;
  VectorXd theta;
};

namespace detail {

inline int draw_category(std::mt19937_64& rng, const std::vector<double>& p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double v = u(rng);
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    cum += p[k];
    if (v < cum) return static_cast<int>(k);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace detail

/// Replicate `index` of a scenario: design, truth, regression means, and response.
inline Replicate generate(const ScenarioConfig& cfg, std::uint64_t index) {
  Replicate rep;
  const DataSchema schema = scenario_schema(cfg.kind);
  const auto vars = scenario_variables(cfg.kind);
  const auto& probs = category_probabilities();
  const Index n = cfg.n;

  Dataset& d = rep.data;
  d.schema = schema;
  d.y.resize(n);
  d.x.resize(n, 1);
  d.c.resize(n, static_cast<Index>(vars.size()));
  {
    std::mt19937_64 rng(stream_seed(cfg.seed, Stream::Design, cfg.fixed_design ? 0 : index));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      d.x(i, 0) = normal(rng);
      // All three categories are drawn even when a variant drops one, so the kept
      // variables follow the same stream in every scenario.
      std::array<int, 3> cat{};
      for (std::size_t v = 0; v < 3; ++v) cat[v] = detail::draw_category(rng, probs[v]);
      for (std::size_t m = 0; m < vars.size(); ++m) d.c(i, static_cast<Index>(m)) = cat[static_cast<std::size_t>(vars[m])];
    }
  }

  const auto terms = model_terms(schema.categorical);
  Index width = 0;
  for (const auto& t : terms) width += term_width(schema.categorical, t);
  std::vector<double> coef;
  if (cfg.kind == ScenarioKind::Sparse) {
    coef = sparse_coefficients();
  } else {
    std::mt19937_64 rng(stream_seed(cfg.seed, Stream::Coefficients, cfg.redraw_coefficients ? index : 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    coef.resize(static_cast<std::size_t>(width));
    for (auto& a : coef) a = unif(rng);
  }
  rep.truth = TrueModel::from_flat(schema.categorical, terms, 1.0, VectorXd::Constant(1, 2.0), coef, cfg.sigma);
  rep.theta = true_theta(rep.truth, d);

  std::mt19937_64 rng(stream_seed(cfg.seed, Stream::Noise, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) d.y(i) = rep.theta(i) + cfg.sigma * normal(rng);
  d.validate();
  return rep;
}

inline Replicate gen_dense(ScenarioConfig cfg, std::uint64_t index) {
  if (cfg.kind == ScenarioKind::Sparse) cfg.kind = ScenarioKind::Dense;
  return generate(cfg, index);
}

inline Replicate gen_sparse(ScenarioConfig cfg, std::uint64_t index) {
  cfg.kind = ScenarioKind::Sparse;
  return generate(cfg, index);
}

// ---------------------------------------------------------------------------
// Summaries

/// Averaged squared error N^{-1} sum (estimate_i - truth_i)^2.
inline double ase(const VectorXd& estimate, const VectorXd& truth) {
  if (estimate.size() != truth.size()) throw ValueError("ase: length mismatch");
  if (estimate.size() == 0) throw ValueError("ase: empty input");
  return (estimate - truth).squaredNorm() / static_cast<double>(estimate.size());
}

/// Linear-interpolation quantile (the common "type 7" definition).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct BoxplotStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;

  static BoxplotStats of(std::vector<double> v) {
    BoxplotStats b;
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
    if (v.empty()) {
      b.min = b.q1 = b.median = b.q3 = b.max = b.whisker_low = b.whisker_high = std::numeric_limits<double>::quiet_NaN();
      return b;
    }
    std::sort(v.begin(), v.end());
    b.min = v.front();
    b.max = v.back();
    b.q1 = quantile(v, 0.25);
    b.median = quantile(v, 0.5);
    b.q3 = quantile(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
    b.whisker_low = b.max;
    b.whisker_high = b.min;
    for (double x : v) {
      if (x < lo || x > hi) {
        b.outliers.push_back(x);
      } else {
        b.whisker_low = std::min(b.whisker_low, x);
        b.whisker_high = std::max(b.whisker_high, x);
      }
    }
    return b;
  }

  nlohmann::json to_json() const {
    return {{"min", min}, {"q1", q1}, {"median", median}, {"q3", q3}, {"max", max},
            {"whisker_low", whisker_low}, {"whisker_high", whisker_high}, {"outliers", outliers}};
  }
};

/// Per-replicate fitted quantities used by the consistency checks.
struct ReplicateDiagnostics {
  double b0_hat = 0, b1_hat = 0, R_hat = 0, h_hat = 0, h_N = 0;
  double alpha_bar = 0;  // mean of the true group effects
  double G_K = 0;        // K^{-1} sum (alpha_k - alpha_bar)^2 of the true group effects
  bool clamped = false;
};

struct MethodSummary {
  std::string name;
  std::vector<double> ase;  // per replicate, NaN where the replicate failed
  BoxplotStats box;
};

struct RunSummary {
  ScenarioConfig config;
  std::vector<MethodSummary> methods;
  std::vector<Index> group_counts;
  std::vector<ReplicateDiagnostics> diagnostics;
  int failures = 0;
  std::vector<std::string> failure_messages;

  // Relative-bias study only, per row.
  VectorXd mse_true;
  VectorXd mse_hat_mean;
  VectorXd rb;
  BoxplotStats rb_box;

  const MethodSummary& method(const std::string& name) const {
    for (const auto& m : methods) {
      if (m.name == name) return m;
    }
    throw ConfigError("no method named '" + name + "' in run summary");
  }
};

/// {E(MSE-hat) - MSE} / MSE per row.
inline VectorXd relative_bias(const VectorXd& mse_true, const VectorXd& mse_hat_mean) {
  if (mse_true.size() != mse_hat_mean.size()) throw ValueError("relative_bias: length mismatch");
  return (mse_hat_mean.array() / mse_true.array() - 1.0).matrix();
}

/// Runs body(i) for i in [0, n) on `threads` workers; each index is claimed exactly once.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

namespace detail {

inline ReplicateDiagnostics diagnostics_of(const FittedPmmp& f, const Replicate& rep) {
  ReplicateDiagnostics dg;
  dg.b0_hat = f.b0;
  dg.b1_hat = f.b.size() > 0 ? f.b(0) : 0.0;
  dg.R_hat = f.R;
  dg.h_hat = f.h;
  dg.h_N = f.h_N;
  dg.clamped = f.clamped();
  // True group effect: theta_i - b0 - x_i'b is constant within a group.
  const Index K = f.partition.group_count();
  VectorXd alpha(K);
  for (Index k = 0; k < K; ++k) {
    const Index i = f.partition.members[static_cast<std::size_t>(k)].front();
    alpha(k) = rep.theta(i) - rep.truth.b0 - rep.data.x.row(i).dot(rep.truth.b);
  }
  dg.alpha_bar = alpha.mean();
  dg.G_K = (alpha.array() - dg.alpha_bar).square().mean();
  return dg;
}

// Lasso pick from an elastic-net CV run: the alpha = 1 row, same folds and grid.
inline ElasticNetFit lasso_from_cv(const StandardizedProblem& full, const CvResult& cv, const std::vector<double>& alphas,
                                   const EnetOptions& opt) {
  std::size_t row = alphas.size();
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (alphas[a] == 1.0) row = a;
  }
  if (row == alphas.size()) throw ConfigError("alpha grid must contain 1 for the lasso baseline");
  Index best = 0;
  cv.cv_errors.row(static_cast<Index>(row)).minCoeff(&best);
  const auto& grid = cv.grids[row];
  return enet_path(full, 1.0, std::vector<double>(grid.begin(), grid.begin() + best + 1), opt).back();
}

}  // namespace detail

inline RunSummary run_comparison(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.n_sim);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> a_pmmp(reps, nan), a_lasso(reps, nan), a_enet(reps, nan);
  std::vector<Index> ks(reps, 0);
  std::vector<ReplicateDiagnostics> diags(reps);
  std::vector<std::string> errors(reps);

  parallel_for(reps, cfg.threads, [&](std::size_t s) {
    try {
      const Replicate rep = generate(cfg, s);
      const FittedPmmp f = fit(rep.data, cfg.fit);
      a_pmmp[s] = ase(predict_all(f, rep.data), rep.theta);
      ks[s] = f.partition.group_count();
      diags[s] = detail::diagnostics_of(f, rep);
      if (cfg.baselines) {
        const ExpandedDesign design = expand(rep.data, model_terms(rep.data.schema.categorical));
        CvOptions cv;
        cv.folds = cfg.cv_folds;
        cv.alphas = cfg.alpha_grid;
        cv.seed = stream_seed(cfg.seed, Stream::CrossValidation, s);
        const CvResult enet = cv_select(design.matrix, rep.data.y, cv);
        const ElasticNetFit lasso = detail::lasso_from_cv(standardize(design.matrix, rep.data.y), enet, cv.alphas, cv.enet);
        a_enet[s] = ase(predict_enet(enet.fit, design.matrix), rep.theta);
        a_lasso[s] = ase(predict_enet(lasso, design.matrix), rep.theta);
      }
    } catch (const std::exception& e) {
      errors[s] = e.what();
      a_pmmp[s] = a_lasso[s] = a_enet[s] = nan;
    }
  });

  RunSummary out;
  out.config = cfg;
  out.group_counts = std::move(ks);
  out.diagnostics = std::move(diags);
  for (std::size_t s = 0; s < reps; ++s) {
    if (!errors[s].empty()) {
      ++out.failures;
      out.failure_messages.push_back("replicate " + std::to_string(s) + ": " + errors[s]);
    }
  }
  out.methods.push_back({"pmmp", a_pmmp, BoxplotStats::of(a_pmmp)});
  if (cfg.baselines) {
    out.methods.push_back({"lasso", a_lasso, BoxplotStats::of(a_lasso)});
    out.methods.push_back({"enet", a_enet, BoxplotStats::of(a_enet)});
  }
  return out;
}

namespace detail {

// Row permutation sorting a design by (category tuple, x) so rows can be matched across runs.
inline std::vector<Index> design_order(const Dataset& d) {
  std::vector<Index> order(static_cast<std::size_t>(d.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (int j = 0; j < d.q1(); ++j) {
      if (d.c(a, j) != d.c(b, j)) return d.c(a, j) < d.c(b, j);
    }
    for (Index j = 0; j < d.p(); ++j) {
      if (d.x(a, j) != d.x(b, j)) return d.x(a, j) < d.x(b, j);
    }
    return false;
  });
  return order;
}

}  // namespace detail

inline RunSummary run_rb_study(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.n_sim);
  const auto n = static_cast<std::size_t>(cfg.n);
  std::vector<std::vector<double>> sq(reps), hat(reps);
  std::vector<double> a_pmmp(reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<Index> ks(reps, 0);
  std::vector<ReplicateDiagnostics> diags(reps);
  std::vector<std::string> errors(reps);

  parallel_for(reps, cfg.threads, [&](std::size_t s) {
    try {
      const Replicate rep = generate(cfg, s);
      const FittedPmmp f = fit(rep.data, cfg.fit);
      const auto m = margins(f, rep.data);
      const auto order = cfg.fixed_design ? std::vector<Index>{} : detail::design_order(rep.data);
      std::vector<double> e(n), h(n);
      VectorXd theta_hat(rep.data.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(cfg.fixed_design ? static_cast<Index>(i) : order[i]);
        const double err = m[row].theta - rep.theta(static_cast<Index>(row));
        e[i] = err * err;
        h[i] = m[row].mse.value;
        theta_hat(static_cast<Index>(row)) = m[row].theta;
      }
      a_pmmp[s] = ase(theta_hat, rep.theta);
      ks[s] = f.partition.group_count();
      diags[s] = detail::diagnostics_of(f, rep);
      sq[s] = std::move(e);
      hat[s] = std::move(h);
    } catch (const std::exception& ex) {
      errors[s] = ex.what();
    }
  });

  RunSummary out;
  out.config = cfg;
  out.group_counts = std::move(ks);
  out.diagnostics = std::move(diags);
  out.mse_true = VectorXd::Zero(static_cast<Index>(n));
  out.mse_hat_mean = VectorXd::Zero(static_cast<Index>(n));
  int ok = 0;
  for (std::size_t s = 0; s < reps; ++s) {
    if (!errors[s].empty()) {
      ++out.failures;
      out.failure_messages.push_back("replicate " + std::to_string(s) + ": " + errors[s]);
      continue;
    }
    ++ok;
    for (std::size_t i = 0; i < n; ++i) {
      out.mse_true(static_cast<Index>(i)) += sq[s][i];
      out.mse_hat_mean(static_cast<Index>(i)) += hat[s][i];
    }
  }
  if (ok > 0) {
    out.mse_true /= ok;
    out.mse_hat_mean /= ok;
  }
  out.rb = relative_bias(out.mse_true, out.mse_hat_mean);
  out.rb_box = BoxplotStats::of(std::vector<double>(out.rb.data(), out.rb.data() + out.rb.size()));
  out.methods.push_back({"pmmp", a_pmmp, BoxplotStats::of(a_pmmp)});
  return out;
}

inline RunSummary run(const ScenarioConfig& cfg) {
  return cfg.study == StudyKind::Comparison ? run_comparison(cfg) : run_rb_study(cfg);
}

}  // namespace pmmp::sim
