#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using namespace pmmp;

struct Problem {
  MatrixXd x;
  VectorXd y;
};

Problem random_problem(std::uint64_t seed, Index n, Index P, int signal = 3, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Problem pr{MatrixXd(n, P), VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < P; ++j) pr.x(i, j) = z(rng) + (j % 3 == 0 ? 1.5 : 0.0);
  }
  pr.y = VectorXd::Constant(n, 0.7);
  for (int j = 0; j < signal && j < P; ++j) pr.y += (1.0 + j) * pr.x.col(j);
  for (Index i = 0; i < n; ++i) pr.y(i) += noise * z(rng);
  return pr;
}

TEST(Enet, SoftThreshold) {
  EXPECT_EQ(detail::soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(detail::soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(detail::soft_threshold(0.5, 1.0), 0.0);
  EXPECT_EQ(detail::soft_threshold(-1.0, 1.0), 0.0);
}

TEST(Enet, AboveLambdaMaxIsNull) {
  const auto pr = random_problem(1, 40, 8);
  const auto s = standardize(pr.x, pr.y);
  const double top = lambda_max(s, 1.0);
  const auto path = enet_path(pr.x, pr.y, 1.0, {top * 1.01, top});
  for (const auto& f : path) {
    EXPECT_EQ(f.nonzero_count(), 0);
    EXPECT_NEAR(f.intercept, pr.y.mean(), 1e-14);
  }
}

TEST(Enet, ZeroLambdaIsOls) {
  const auto pr = random_problem(2, 60, 5);
  const auto f = enet_path(pr.x, pr.y, 1.0, {0.0}).back();
  MatrixXd x1(pr.x.rows(), 6);
  x1.col(0).setOnes();
  x1.rightCols(5) = pr.x;
  const VectorXd ols = x1.colPivHouseholderQr().solve(pr.y);
  EXPECT_NEAR(f.intercept, ols(0), 1e-6);
  EXPECT_LT((f.coefficients - ols.tail(5)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Enet, SinglePredictorLassoIsSoftThreshold) {
  const auto pr = random_problem(3, 25, 1, 1);
  const auto s = standardize(pr.x, pr.y);
  const double n = static_cast<double>(pr.x.rows());
  const double zj = s.xs.col(0).dot(s.yc) / n;
  for (double lambda : {0.0, 0.1, 0.5, 0.9 * std::abs(zj), 2.0 * std::abs(zj)}) {
    const auto f = enet_path(s, 1.0, {lambda}).back();
    EXPECT_NEAR(f.coef_std(0), detail::soft_threshold(zj, lambda), 1e-12);
  }
}

TEST(Enet, KktHoldsAlongPaths) {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const auto pr = random_problem(seed, 30, 50, 4);
    for (double a : {0.0, 0.3, 0.7, 1.0}) {
      for (const auto& f : enet_path(pr.x, pr.y, a)) {
        EXPECT_TRUE(f.converged);
        EXPECT_LE(kkt_violation(pr.x, pr.y, f), 1e-6) << "alpha " << a << " lambda " << f.lambda;
      }
    }
  }
}

TEST(Enet, KktHoldsWithDuplicateColumns) {
  auto pr = random_problem(20, 30, 10, 2);
  pr.x.col(5) = pr.x.col(0);
  pr.x.col(7) = -pr.x.col(1);
  pr.x.col(9).setConstant(4.0);
  for (double a : {0.5, 1.0}) {
    for (const auto& f : enet_path(pr.x, pr.y, a)) {
      EXPECT_LE(kkt_violation(pr.x, pr.y, f), 1e-6);
      EXPECT_EQ(f.coefficients(9), 0.0);
    }
  }
}

TEST(Enet, ObjectiveIsMonotoneAcrossSweeps) {
  const auto pr = random_problem(4, 40, 30, 5);
  const auto s = standardize(pr.x, pr.y);
  const auto grid = lambda_grid(s, 0.5);
  std::vector<double> trace;
  EnetOptions opt;
  opt.objective_trace = &trace;
  enet_path(s, 0.5, {grid[40]}, opt);
  ASSERT_GT(trace.size(), 1u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
}

TEST(Enet, PathIsContinuous) {
  const auto pr = random_problem(5, 50, 12, 4);
  const auto s = standardize(pr.x, pr.y);
  auto grid = lambda_grid(s, 0.8, 400, 2.0);
  const auto path = enet_path(s, 0.8, grid);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double dl = grid[i - 1] - grid[i];
    EXPECT_LE((path[i].coef_std - path[i - 1].coef_std).cwiseAbs().maxCoeff(), 50.0 * dl + 1e-6);
  }
}

TEST(Enet, PredictionMatchesManualDotProduct) {
  const auto pr = random_problem(6, 30, 6);
  const auto f = enet_path(pr.x, pr.y, 0.5).at(60);
  const VectorXd batch = predict_enet(f, pr.x);
  for (Index i = 0; i < pr.x.rows(); ++i) {
    double manual = f.intercept;
    for (Index j = 0; j < 6; ++j) manual += pr.x(i, j) * f.coefficients(j);
    EXPECT_NEAR(batch(i), manual, 1e-12);
    EXPECT_EQ(batch(i), predict_enet(f, VectorXd(pr.x.row(i).transpose())));
  }
  ElasticNetFit zero;
  zero.intercept = 2.5;
  zero.coefficients = VectorXd::Zero(6);
  EXPECT_EQ(predict_enet(zero, VectorXd(pr.x.row(0).transpose())), 2.5);
}

TEST(Enet, RejectsBadInputs) {
  const auto pr = random_problem(7, 10, 3);
  EXPECT_THROW(enet_path(pr.x, pr.y, 1.5), ValueError);
  MatrixXd bad = pr.x;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(enet_path(bad, pr.y, 1.0), ValueError);
  CvOptions too_many;
  too_many.folds = 20;
  EXPECT_THROW(cv_select(pr.x, pr.y, too_many), ConfigError);
}

TEST(Cv, NullResponseSelectsNearNullModel) {
  std::vector<Index> counts;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> z;
    MatrixXd x(50, 20);
    VectorXd y(50);
    for (Index i = 0; i < 50; ++i) {
      for (Index j = 0; j < 20; ++j) x(i, j) = z(rng);
      y(i) = z(rng);
    }
    CvOptions opt;
    opt.seed = static_cast<std::uint64_t>(r);
    opt.alphas = {0.5, 1.0};
    counts.push_back(cv_select(x, y, opt).fit.nonzero_count());
  }
  std::nth_element(counts.begin(), counts.begin() + runs / 2, counts.end());
  EXPECT_LE(counts[runs / 2], 2);
}

TEST(Cv, StrongSignalIsAlwaysSelected) {
  for (int r = 0; r < 10; ++r) {
    auto pr = random_problem(2000 + static_cast<std::uint64_t>(r), 40, 15, 0, 0.5);
    pr.y += 3.0 * pr.x.col(4);
    CvOptions opt;
    opt.seed = static_cast<std::uint64_t>(r);
    const auto res = cv_select(pr.x, pr.y, opt);
    EXPECT_NE(res.fit.coefficients(4), 0.0);
  }
}

TEST(Cv, SameSeedSameSelection) {
  const auto pr = random_problem(8, 40, 25, 3);
  CvOptions opt;
  opt.seed = 99;
  const auto a = cv_select(pr.x, pr.y, opt), b = cv_select(pr.x, pr.y, opt);
  EXPECT_EQ(a.fold_of, b.fold_of);
  EXPECT_EQ(a.alpha_mix, b.alpha_mix);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.fit.coefficients, b.fit.coefficients);
  EXPECT_EQ(a.cv_errors, b.cv_errors);
}

TEST(Cv, FoldsAreBalanced) {
  const auto folds = assign_folds(53, 10, 4);
  std::vector<int> count(10, 0);
  for (int f : folds) ++count[static_cast<std::size_t>(f)];
  for (int c : count) {
    EXPECT_GE(c, 5);
    EXPECT_LE(c, 6);
  }
}

TEST(Cv, LassoRowMatchesSeparateLassoRun) {
  // The simulation harness reads the lasso baseline off the alpha = 1 row of the
  // joint run; a lasso-only run with the same folds must select the same model.
  const auto pr = random_problem(9, 30, 40, 4);
  CvOptions both;
  both.seed = 5;
  const auto joint = cv_select(pr.x, pr.y, both);
  CvOptions lasso = both;
  lasso.alphas = {1.0};
  const auto alone = cv_select(pr.x, pr.y, lasso);
  const auto s = standardize(pr.x, pr.y);
  const auto from_joint = sim::detail::lasso_from_cv(s, joint, both.alphas, both.enet);
  EXPECT_EQ(from_joint.lambda, alone.lambda);
  EXPECT_EQ(from_joint.coefficients, alone.fit.coefficients);
}

}  // namespace
