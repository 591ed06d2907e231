#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using namespace pmmp;

TEST(Generator, CategoryFrequencies) {
  sim::ScenarioConfig cfg;
  cfg.n = 100000;
  const auto rep = sim::generate(cfg, 0);
  const auto& probs = sim::category_probabilities();
  for (std::size_t v = 0; v < 3; ++v) {
    std::vector<double> freq(probs[v].size(), 0.0);
    for (Index i = 0; i < cfg.n; ++i) freq[static_cast<std::size_t>(rep.data.c(i, static_cast<Index>(v)))] += 1.0;
    for (std::size_t k = 0; k < freq.size(); ++k) EXPECT_NEAR(freq[k] / static_cast<double>(cfg.n), probs[v][k], 0.01);
  }
}

TEST(Generator, NoiselessResponseIsTheMean) {
  sim::ScenarioConfig cfg;
  cfg.sigma = 0.0;
  const auto rep = sim::generate(cfg, 5);
  EXPECT_EQ(rep.data.y, rep.theta);
}

TEST(Generator, SameSeedSameData) {
  sim::ScenarioConfig cfg;
  for (auto kind : {sim::ScenarioKind::Dense, sim::ScenarioKind::Sparse, sim::ScenarioKind::VariantB}) {
    cfg.kind = kind;
    const auto a = sim::generate(cfg, 17), b = sim::generate(cfg, 17);
    EXPECT_EQ(a.data.y, b.data.y);
    EXPECT_EQ(a.data.x, b.data.x);
    EXPECT_EQ(a.data.c, b.data.c);
    EXPECT_EQ(a.truth.flat(), b.truth.flat());
    const auto c = sim::generate(cfg, 18);
    EXPECT_NE(a.data.y, c.data.y);
  }
}

TEST(Generator, FixedDesignKeepsPredictors) {
  sim::ScenarioConfig cfg;
  cfg.fixed_design = true;
  const auto a = sim::generate(cfg, 1), b = sim::generate(cfg, 2);
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.c, b.data.c);
  EXPECT_NE(a.truth.flat(), b.truth.flat());
  cfg.redraw_coefficients = false;
  EXPECT_EQ(sim::generate(cfg, 1).truth.flat(), sim::generate(cfg, 2).truth.flat());
}

TEST(Generator, VariantsShareTheKeptColumns) {
  sim::ScenarioConfig dense, variant;
  variant.kind = sim::ScenarioKind::VariantA;
  const auto a = sim::generate(dense, 3), b = sim::generate(variant, 3);
  ASSERT_EQ(b.data.c.cols(), 2);
  EXPECT_EQ(b.data.c.col(0), a.data.c.col(1));
  EXPECT_EQ(b.data.c.col(1), a.data.c.col(2));
  EXPECT_EQ(b.data.x, a.data.x);
}

TEST(Generator, SparseCoefficients) {
  const auto a = sim::sparse_coefficients();
  ASSERT_EQ(a.size(), 119u);
  EXPECT_EQ(std::count(a.begin(), a.end(), 2.0), 59);
  EXPECT_EQ(std::count(a.begin(), a.end(), 0.0), 60);
  EXPECT_TRUE(std::all_of(a.begin(), a.begin() + 29, [](double v) { return v == 2.0; }));
}

TEST(Generator, SparseGroupsAtMostN) {
  sim::ScenarioConfig cfg;
  cfg.kind = sim::ScenarioKind::Sparse;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto rep = sim::generate(cfg, r);
    EXPECT_LE(build_partition(rep.data).group_count(), 30);
  }
}

TEST(Generator, ThetaMatchesExpandedDesign) {
  const auto rep = sim::generate(sim::ScenarioConfig{}, 8);
  const auto e = expand(rep.data, model_terms(rep.data.schema.categorical));
  const auto flat = rep.truth.flat();
  VectorXd beta(e.predictor_count());
  beta(0) = 2.0;
  for (std::size_t j = 0; j < flat.size(); ++j) beta(static_cast<Index>(j) + 1) = flat[j];
  EXPECT_LT((rep.theta - ((e.matrix * beta).array() + 1.0).matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ase, Identities) {
  const VectorXd a = (VectorXd(3) << 1, 2, 3).finished();
  EXPECT_EQ(sim::ase(a, a), 0.0);
  EXPECT_DOUBLE_EQ(sim::ase(a.array() + 0.5, a), 0.25);
  const VectorXd b = (VectorXd(3) << 2, 0, 3).finished();
  EXPECT_DOUBLE_EQ(sim::ase(a, b), 5.0 / 3.0);
  EXPECT_THROW(sim::ase(a, VectorXd::Zero(2)), ValueError);
}

TEST(Summary, QuantilesAndBoxplot) {
  const std::vector<double> v{5, 1, 4, 2, 3, 100};
  EXPECT_DOUBLE_EQ(sim::quantile(v, 0.5), 3.5);
  EXPECT_DOUBLE_EQ(sim::quantile(v, 0.25), 2.25);
  const auto b = sim::BoxplotStats::of(v);
  EXPECT_DOUBLE_EQ(b.median, 3.5);
  EXPECT_EQ(b.outliers, std::vector<double>{100});
  EXPECT_EQ(b.whisker_high, 5.0);
  EXPECT_EQ(b.whisker_low, 1.0);
  const auto with_nan = sim::BoxplotStats::of({1.0, std::nan(""), 3.0});
  EXPECT_DOUBLE_EQ(with_nan.median, 2.0);
}

TEST(RelativeBias, TrueMseAgainstItselfIsZero) {
  const VectorXd m = (VectorXd(4) << 0.1, 0.5, 2.0, 1e-3).finished();
  EXPECT_EQ(sim::relative_bias(m, m), VectorXd::Zero(4));
  EXPECT_NEAR(sim::relative_bias(m, 1.1 * m)(2), 0.1, 1e-12);
}

TEST(Config, JsonRoundTrip) {
  sim::ScenarioConfig c;
  c.kind = sim::ScenarioKind::VariantC;
  c.n = 50;
  c.sigma = 0.8;
  c.n_sim = 17;
  c.seed = 99;
  c.redraw_coefficients = false;
  c.cv_folds = 5;
  c.alpha_grid = {0.5, 1.0};
  c.fit.delta = 0.25;
  c.fit.extra_iterations = 2;
  const auto back = sim::config_from_json(sim::config_to_json(c));
  EXPECT_EQ(sim::config_to_json(back), sim::config_to_json(c));
}

TEST(Config, RbDefaults) {
  const auto c = sim::config_from_json({{"study", "rb"}, {"n", 50}});
  EXPECT_TRUE(c.fixed_design);
  EXPECT_FALSE(c.baselines);
  EXPECT_EQ(c.study, sim::StudyKind::RelativeBias);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(sim::config_from_json({{"kind", "bogus"}}), ConfigError);
  EXPECT_THROW(sim::config_from_json({{"sigma", -1.0}}), ConfigError);
  EXPECT_THROW(sim::config_from_json({{"n", 5}}), ConfigError);
  EXPECT_THROW(sim::config_from_json({{"alpha_grid", {1.5}}}), ConfigError);
  EXPECT_THROW(sim::config_from_json({{"n", "many"}}), ConfigError);
  EXPECT_THROW(sim::config_from_json({{"n_sims", 10}}), ConfigError);
}

TEST(Harness, ComparisonHasThreeMethodsAndIsReproducible) {
  sim::ScenarioConfig cfg;
  cfg.n_sim = 3;
  cfg.alpha_grid = {0.5, 1.0};
  const auto a = sim::run(cfg);
  ASSERT_EQ(a.methods.size(), 3u);
  EXPECT_EQ(a.methods[0].name, "pmmp");
  EXPECT_EQ(a.methods[1].name, "lasso");
  EXPECT_EQ(a.methods[2].name, "enet");
  EXPECT_EQ(a.failures, 0);
  cfg.threads = 2;
  const auto b = sim::run(cfg);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(a.methods[m].ase, b.methods[m].ase);
}

TEST(Harness, ThreadCountDoesNotChangeResults) {
  sim::ScenarioConfig cfg;
  cfg.baselines = false;
  cfg.n_sim = 40;
  cfg.threads = 1;
  const auto a = sim::run(cfg);
  cfg.threads = 4;
  const auto b = sim::run(cfg);
  EXPECT_EQ(a.methods[0].ase, b.methods[0].ase);
  EXPECT_EQ(a.group_counts, b.group_counts);
}

TEST(Harness, VariantDSaturatesAtSixGroups) {
  sim::ScenarioConfig cfg;
  cfg.kind = sim::ScenarioKind::VariantD;
  cfg.n = 50;
  cfg.n_sim = 50;
  cfg.baselines = false;
  const auto r = sim::run(cfg);
  for (std::size_t s = 0; s < r.group_counts.size(); ++s) {
    const auto rep = sim::generate(cfg, s);
    std::set<int> seen(rep.data.c.data(), rep.data.c.data() + rep.data.c.size());
    EXPECT_EQ(r.group_counts[s], static_cast<Index>(seen.size()));
    if (seen.size() == 6) {
      EXPECT_EQ(r.group_counts[s], 6);
    }
  }
}

TEST(Harness, RbStudyShapes) {
  sim::ScenarioConfig cfg;
  cfg.study = sim::StudyKind::RelativeBias;
  cfg.fixed_design = true;
  cfg.baselines = false;
  cfg.n = 40;
  cfg.n_sim = 30;
  const auto r = sim::run(cfg);
  EXPECT_EQ(r.rb.size(), 40);
  EXPECT_EQ(r.failures, 0);
  EXPECT_TRUE(r.mse_true.allFinite());
  EXPECT_TRUE((r.mse_hat_mean.array() > 0).all());
}

TEST(Parallel, EveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  sim::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

}  // namespace
