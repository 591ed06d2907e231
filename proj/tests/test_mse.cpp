#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using namespace pmmp;

TEST(WDecomposition, MatchesDenseFormula) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 10; ++t) {
    const auto d = oracle::random_grouped(rng, 6, 2, 1, 8);
    const auto g = build_partition(d);
    const auto s = compute_stats(d, g);
    for (double h : {0.05, 0.8, 6.0}) {
      const auto w = build_w(s, h);
      EXPECT_LT(oracle::max_abs(materialize_w(w, d, g) - oracle::dense_w(d, g, h)), 1e-8);
      EXPECT_LT(oracle::max_abs(materialize_w3(w, d, g) - oracle::dense_w3(d, g, h)), 1e-8);
    }
  }
}

TEST(WDecomposition, SmallHApproachesOls) {
  std::mt19937_64 rng(102);
  const auto d = oracle::random_grouped(rng, 7, 2);
  const auto g = build_partition(d);
  const auto w = build_w(compute_stats(d, g), 1e-8);
  EXPECT_NEAR(w.d1, static_cast<double>(d.size()), 1e-5);
  // Centered OLS slope weights: (Xc'Xc)^{-1} Xc'.
  const MatrixXd xc = d.x.rowwise() - d.x.colwise().mean();
  const MatrixXd ols = (xc.transpose() * xc).inverse() * xc.transpose();
  EXPECT_LT(oracle::max_abs(materialize_w(w, d, g) - ols), 1e-6);
  EXPECT_LT(oracle::max_abs(materialize_w(w, d, g) - oracle::dense_w(d, g, 1e-8)), 1e-6);
}

TEST(WDecomposition, HandInstance) {
  // p = 1, K = 2: group 0 x = (0, 2), group 1 x = (1); h = 1.
  GroupStats s;
  s.N = 3;
  s.n = (VectorXd(2) << 2, 1).finished();
  s.ybar = VectorXd::Zero(2);
  s.xbar = (MatrixXd(2, 1) << 1, 1).finished();
  s.syy = VectorXd::Zero(2);
  s.sxy = MatrixXd::Zero(2, 1);
  s.sxx = {MatrixXd::Constant(1, 1, 2.0), MatrixXd::Zero(1, 1)};
  const auto w = build_w(s, 1.0);
  // omega = (2/3, 1/2); d1 = 7/6; M = 2 + 7/6; s = 7/6; d2 = (7/6)^2 / (19/6).
  EXPECT_NEAR(w.d1, 7.0 / 6.0, 1e-15);
  EXPECT_NEAR(w.M(0, 0), 19.0 / 6.0, 1e-15);
  EXPECT_NEAR(w.d2, (49.0 / 36.0) / (19.0 / 6.0), 1e-15);
  EXPECT_NEAR(w.d, 7.0 / 6.0 - (49.0 / 36.0) / (19.0 / 6.0), 1e-15);
}

TEST(WDecomposition, AveragingRowIdentities) {
  std::mt19937_64 rng(103);
  const auto d = oracle::random_grouped(rng, 5, 1);
  const auto g = build_partition(d);
  const MatrixXd z = oracle::z_matrix(g);
  std::normal_distribution<double> gauss;
  VectorXd alpha(g.group_count()), eps(d.size());
  for (auto& a : alpha) a = gauss(rng);
  for (auto& e : eps) e = gauss(rng);
  const VectorXd centered = z * alpha - VectorXd::Constant(d.size(), alpha.mean());
  for (Index k = 0; k < g.group_count(); ++k) {
    const VectorXd wk = oracle::w_k(g, k);
    EXPECT_NEAR(wk.dot(centered), alpha(k) - alpha.mean(), 1e-12);
    double eps_bar = 0.0;
    for (Index i : g.members[static_cast<std::size_t>(k)]) eps_bar += eps(i) / static_cast<double>(g.size(k));
    EXPECT_NEAR(wk.dot(eps), eps_bar, 1e-12);
    EXPECT_NEAR(wk.sum(), 1.0, 1e-12);
    EXPECT_NEAR(wk.squaredNorm(), 1.0 / static_cast<double>(g.size(k)), 1e-12);
    EXPECT_NEAR((z.transpose() * wk - VectorXd::Unit(g.group_count(), k)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(wk.dot(d.x.col(0)), compute_stats(d, g).xbar(k, 0), 1e-12);
  }
}

TEST(WDecomposition, RejectsBadH) {
  std::mt19937_64 rng(104);
  const auto d = oracle::random_grouped(rng, 4, 1);
  const auto s = compute_stats(d, build_partition(d));
  EXPECT_THROW(build_w(s, 0.0), ValueError);
  EXPECT_THROW(build_w(s, std::numeric_limits<double>::infinity()), ValueError);
}

TEST(Mse, MatchesDenseTwoBracketEvaluation) {
  std::mt19937_64 rng(105);
  for (int t = 0; t < 5; ++t) {
    const auto d = oracle::random_grouped(rng, 7, 2);
    const auto f = fit(d);
    const auto w = build_w(f.stats, f.h);
    const VectorXd alpha = alpha_hats(f);
    for (Index i = 0; i < d.size(); ++i) {
      const auto e = mse_theta(f, w, d, i);
      const auto ref = oracle::dense_mse(d, f.partition, f.h, f.R, alpha, i);
      EXPECT_NEAR(e.bias, ref.bias, 1e-9 * std::max(1.0, ref.bias));
      EXPECT_NEAR(e.variance, ref.variance, 1e-9 * std::max(1.0, ref.variance));
    }
  }
}

TEST(Mse, ValueIsBiasPlusVarianceAndNonnegative) {
  sim::ScenarioConfig cfg;
  cfg.n = 60;
  const auto rep = sim::generate(cfg, 4);
  const auto f = fit(rep.data);
  for (const auto& m : margins(f, rep.data)) {
    EXPECT_GE(m.mse.value, 0.0);
    EXPECT_GE(m.mse.bias, 0.0);
    EXPECT_GE(m.mse.variance, 0.0);
    EXPECT_DOUBLE_EQ(m.mse.value, m.mse.bias + m.mse.variance);
    EXPECT_DOUBLE_EQ(m.mse.margin, 2.0 * std::sqrt(m.mse.value));
  }
}

TEST(Mse, SymmetricToyWithZeroEffects) {
  // Two groups of two, x symmetric about each group mean and equal group means;
  // alpha-hat is zero so only the variance term remains.
  Dataset d;
  d.schema.response = "y";
  d.schema.continuous = {"x"};
  d.schema.categorical.variables.push_back({"g", {"a", "b"}, 0});
  d.y = (VectorXd(4) << -1, 1, 1, -1).finished();
  d.x = (MatrixXd(4, 1) << -1, 1, -1, 1).finished();
  d.c = (LevelMatrix(4, 1) << 0, 0, 1, 1).finished();
  const auto g = build_partition(d);
  FittedPmmp f;
  f.partition = g;
  f.stats = compute_stats(d, g);
  f.b0 = 0.0;
  f.b = VectorXd::Zero(1);
  f.R = 0.5;
  f.h = 1.0;
  f.h_N = 0.1;
  const auto w = build_w(f.stats, f.h);
  const VectorXd alpha = alpha_hats(f);
  ASSERT_NEAR(alpha.cwiseAbs().maxCoeff(), 0.0, 1e-15);
  // c = 1/3, gamma = 2/3, omega = 2/3 each; d1 = 4/3; M = 4, s = 0, d = 4/3.
  // Evaluated at x = xbar_0 = 0, where the slope part of the bracket drops out.
  const auto e = mse_at(f, w, VectorXd::Zero(1), 0, alpha);
  EXPECT_NEAR(e.bias, 0.0, 1e-15);
  // W3 is c = 1/3 on every row since s = 0, giving (1/3)(1/3)/(4/3) = 1/12 per row.
  // Adding gamma w_0 makes the group 0 rows 5/12; group 1 rows stay at 1/12.
  const double sq = 2.0 * (25.0 / 144.0) + 2.0 * (1.0 / 144.0);
  EXPECT_NEAR(e.variance, 0.5 * sq, 1e-14);
}

TEST(Mse, FlagsLowSignalFits) {
  std::mt19937_64 rng(106);
  auto d = oracle::random_grouped(rng, 4, 1, 3, 3);
  d.y = 0.5 + 2.0 * d.x.col(0).array();
  d.y(0) += 1e-3;
  const auto f = fit(d);
  const auto m = margins(f, d);
  EXPECT_EQ(m.front().mse.low_signal, f.clamped());
}

}  // namespace
