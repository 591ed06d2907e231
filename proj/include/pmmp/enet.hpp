#pragma once

// Elastic net by cyclic coordinate descent, minimizing
//
//   (1/2N) |y - b0 - X b|^2 + lambda * (alpha |b|_1 + (1 - alpha)/2 |b|^2)
//
// on internally standardized columns (population scale), with an unpenalized
// intercept, warm starts along a decreasing lambda grid, and K-fold
// cross-validation over (alpha, lambda).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "pmmp/design.hpp"

namespace pmmp {

struct ElasticNetFit {
  double intercept = 0.0;
  VectorXd coefficients;   // original predictor scale
  double lambda = 0.0;
  double alpha_mix = 1.0;
  VectorXd x_mean;
  VectorXd x_scale;        // 0 marks a constant column that never enters
  VectorXd coef_std;       // standardized-scale coefficients the penalty acts on
  int sweeps = 0;
  bool converged = true;

  Index nonzero_count() const { return (coefficients.array() != 0.0).count(); }
};

struct EnetOptions {
  double tolerance = 1e-7;  // max absolute change of a standardized coefficient
  int max_sweeps = 100000;
  std::vector<double>* objective_trace = nullptr;  // objective after every sweep, when set
};

struct StandardizedProblem {
  MatrixXd xs;       // centered, unit population variance; constant columns zeroed
  VectorXd yc;       // centered response
  double y_mean = 0.0;
  VectorXd mean;
  VectorXd scale;
  std::vector<Index> usable;

  Index n() const { return xs.rows(); }
};

namespace detail {

inline void require_finite(const MatrixXd& x, const VectorXd& y) {
  if (!x.allFinite() || !y.allFinite()) throw ValueError("elastic net inputs must be finite");
  if (x.rows() != y.size()) throw ValueError("design and response lengths differ");
  if (x.rows() < 1) throw ValueError("empty design");
}

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

}  // namespace detail

inline StandardizedProblem standardize(const MatrixXd& x, const VectorXd& y) {
  detail::require_finite(x, y);
  const Index n = x.rows(), P = x.cols();
  StandardizedProblem s;
  s.y_mean = y.mean();
  s.yc = y.array() - s.y_mean;
  s.mean = x.colwise().mean().transpose();
  s.scale = VectorXd::Zero(P);
  s.xs = MatrixXd::Zero(n, P);
  for (Index j = 0; j < P; ++j) {
    const auto centered = (x.col(j).array() - s.mean(j)).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(n);
    if (var <= 1e-20 * (1.0 + s.mean(j) * s.mean(j))) continue;
    s.scale(j) = std::sqrt(var);
    s.xs.col(j) = centered / s.scale(j);
    s.usable.push_back(j);
  }
  return s;
}

/// Smallest lambda with an all-zero solution, floored at alpha = 1e-3 for ridge-like mixes.
inline double lambda_max(const StandardizedProblem& s, double alpha_mix) {
  double m = 0.0;
  for (Index j : s.usable) m = std::max(m, std::abs(s.xs.col(j).dot(s.yc)));
  return m / (static_cast<double>(s.n()) * std::max(alpha_mix, 1e-3));
}

inline std::vector<double> lambda_grid(const StandardizedProblem& s, double alpha_mix, int count = 100, double decades = 4.0) {
  const double top = lambda_max(s, alpha_mix);
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double frac = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    grid[static_cast<std::size_t>(i)] = top * std::pow(10.0, -decades * frac);
  }
  return grid;
}

inline double enet_objective(const StandardizedProblem& s, const VectorXd& beta, double lambda, double alpha_mix) {
  const VectorXd r = s.yc - s.xs * beta;
  return r.squaredNorm() / (2.0 * static_cast<double>(s.n())) +
         lambda * (alpha_mix * beta.lpNorm<1>() + 0.5 * (1.0 - alpha_mix) * beta.squaredNorm());
}

namespace detail {

// Slow coordinate descent is usually creeping toward the minimizer on a fixed
// support and sign pattern. That minimizer solves a small linear system; jump to
// it when it keeps every sign and does not raise the objective. The coordinate
// sweeps that follow still decide convergence.
inline bool face_solve(const StandardizedProblem& s, VectorXd& beta, VectorXd& resid, const std::vector<Index>& candidates,
                       double lambda, double alpha_mix) {
  std::vector<Index> active;
  for (Index j : candidates) {
    if (beta(j) != 0.0) active.push_back(j);
  }
  const auto m = static_cast<Index>(active.size());
  if (m == 0) return false;
  const double n = static_cast<double>(s.n());
  MatrixXd xa(s.n(), m);
  VectorXd sign(m);
  for (Index a = 0; a < m; ++a) {
    xa.col(a) = s.xs.col(active[static_cast<std::size_t>(a)]);
    sign(a) = beta(active[static_cast<std::size_t>(a)]) > 0.0 ? 1.0 : -1.0;
  }
  MatrixXd gram = xa.transpose() * xa / n;
  gram.diagonal().array() += lambda * (1.0 - alpha_mix);
  VectorXd current(m);
  for (Index a = 0; a < m; ++a) current(a) = beta(active[static_cast<std::size_t>(a)]);
  // Gradient of the smooth part on the face; a minimum-norm step handles duplicate
  // or collinear columns, where the face minimizer is not unique.
  const VectorXd rhs = xa.transpose() * s.yc / n - lambda * alpha_mix * sign - gram * current;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(gram);
  cod.setThreshold(1e-10);
  const VectorXd next = current + cod.solve(rhs);
  if (!next.allFinite() || ((next.array() * sign.array()) <= 0.0).any()) return false;

  VectorXd candidate = beta;
  for (Index a = 0; a < m; ++a) candidate(active[static_cast<std::size_t>(a)]) = next(a);
  if (enet_objective(s, candidate, lambda, alpha_mix) > enet_objective(s, beta, lambda, alpha_mix)) return false;
  beta = std::move(candidate);
  resid = s.yc - xa * next;
  return true;
}

// One lambda of the path. beta/resid are warm-start state, updated in place.
inline std::pair<int, bool> descend(const StandardizedProblem& s, VectorXd& beta, VectorXd& resid, double lambda,
                                    double alpha_mix, const EnetOptions& opt) {
  const double inv_n = 1.0 / static_cast<double>(s.n());
  const double l1 = lambda * alpha_mix;
  const double denom = 1.0 + lambda * (1.0 - alpha_mix);
  int sweeps = 0;
  // At or above lambda_max the zero vector is optimal; rounding in the first sweep
  // would otherwise let a coordinate escape by a few ulps.
  if (alpha_mix >= 1e-3 && lambda >= lambda_max(s, alpha_mix) && (beta.array() == 0.0).all()) return {0, true};

  auto update = [&](Index j) {
    const double old = beta(j);
    const double z = s.xs.col(j).dot(resid) * inv_n + old;
    const double fresh = soft_threshold(z, l1) / denom;
    if (fresh != old) {
      resid.noalias() -= (fresh - old) * s.xs.col(j);
      beta(j) = fresh;
    }
    return std::abs(fresh - old);
  };
  auto trace = [&] {
    if (opt.objective_trace) opt.objective_trace->push_back(enet_objective(s, beta, lambda, alpha_mix));
  };

  std::vector<Index> active;
  while (sweeps < opt.max_sweeps) {
    double change = 0.0;
    active.clear();
    for (Index j : s.usable) {
      change = std::max(change, update(j));
      if (beta(j) != 0.0) active.push_back(j);
    }
    ++sweeps;
    trace();
    if (change < opt.tolerance) return {sweeps, true};
    // Iterate on the active set to convergence before the next full sweep.
    int next_jump = 5;
    for (int inner_sweeps = 0; sweeps < opt.max_sweeps; ++inner_sweeps) {
      if (inner_sweeps == next_jump) {
        if (face_solve(s, beta, resid, active, lambda, alpha_mix)) {
          trace();
          next_jump += 5;
        } else {
          next_jump = 2 * next_jump + 5;
        }
      }
      double inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++sweeps;
      trace();
      if (inner < opt.tolerance) break;
    }
  }
  return {sweeps, false};
}

inline ElasticNetFit make_fit(const StandardizedProblem& s, const VectorXd& beta, double lambda, double alpha_mix) {
  ElasticNetFit f;
  f.lambda = lambda;
  f.alpha_mix = alpha_mix;
  f.x_mean = s.mean;
  f.x_scale = s.scale;
  f.coef_std = beta;
  f.coefficients = VectorXd::Zero(beta.size());
  double shift = 0.0;
  for (Index j : s.usable) {
    f.coefficients(j) = beta(j) / s.scale(j);
    shift += f.coefficients(j) * s.mean(j);
  }
  f.intercept = s.y_mean - shift;
  return f;
}

}  // namespace detail

/// Path on a standardized problem; `grid` must be decreasing for warm starts to help.
inline std::vector<ElasticNetFit> enet_path(const StandardizedProblem& s, double alpha_mix, const std::vector<double>& grid,
                                            const EnetOptions& opt = {}) {
  if (!(alpha_mix >= 0.0 && alpha_mix <= 1.0)) throw ValueError("alpha_mix must lie in [0, 1]");
  VectorXd beta = VectorXd::Zero(s.xs.cols());
  VectorXd resid = s.yc;
  std::vector<ElasticNetFit> out;
  out.reserve(grid.size());
  for (double lambda : grid) {
    if (!(lambda >= 0.0)) throw ValueError("lambda must be nonnegative");
    const auto [sweeps, ok] = detail::descend(s, beta, resid, lambda, alpha_mix, opt);
    out.push_back(detail::make_fit(s, beta, lambda, alpha_mix));
    out.back().sweeps = sweeps;
    out.back().converged = ok;
  }
  return out;
}

/// Path on a raw design; an empty grid means 100 log-spaced values over 4 decades from lambda_max.
inline std::vector<ElasticNetFit> enet_path(const MatrixXd& x, const VectorXd& y, double alpha_mix,
                                            std::vector<double> grid = {}, const EnetOptions& opt = {}) {
  if (!(alpha_mix >= 0.0 && alpha_mix <= 1.0)) throw ValueError("alpha_mix must lie in [0, 1]");
  if (x.cols() < 1) throw ValueError("empty design");
  const auto s = standardize(x, y);
  if (grid.empty()) grid = lambda_grid(s, alpha_mix);
  return enet_path(s, alpha_mix, grid, opt);
}

inline std::vector<ElasticNetFit> enet_path(const ExpandedDesign& design, const VectorXd& y, double alpha_mix,
                                            std::vector<double> grid = {}, const EnetOptions& opt = {}) {
  return enet_path(design.matrix, y, alpha_mix, std::move(grid), opt);
}

inline double predict_enet(const ElasticNetFit& f, const VectorXd& row) {
  if (row.size() != f.coefficients.size()) throw ValueError("design row length does not match the fit");
  return f.intercept + row.dot(f.coefficients);
}

inline VectorXd predict_enet(const ElasticNetFit& f, const MatrixXd& x) {
  if (x.cols() != f.coefficients.size()) throw ValueError("design width does not match the fit");
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = predict_enet(f, VectorXd(x.row(i).transpose()));
  return out;
}

/// Largest violation of the optimality conditions in the standardized space.
inline double kkt_violation(const MatrixXd& x, const VectorXd& y, const ElasticNetFit& f) {
  const auto s = standardize(x, y);
  const VectorXd r = s.yc - s.xs * f.coef_std;
  const double n = static_cast<double>(s.n());
  double worst = 0.0;
  for (Index j : s.usable) {
    const double grad = s.xs.col(j).dot(r) / n;
    const double bj = f.coef_std(j);
    double v;
    if (bj == 0.0) {
      v = std::max(0.0, std::abs(grad) - f.alpha_mix * f.lambda);
    } else {
      v = std::abs(grad - f.lambda * (1.0 - f.alpha_mix) * bj - f.alpha_mix * f.lambda * (bj > 0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

struct CvOptions {
  int folds = 10;
  std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t seed = 12345;
  int lambda_count = 100;
  double decades = 4.0;
  EnetOptions enet;
};

struct CvResult {
  ElasticNetFit fit;          // refit on all rows at the selected (alpha, lambda)
  double alpha_mix = 0.0;
  double lambda = 0.0;
  double cv_error = 0.0;
  MatrixXd cv_errors;         // alphas x lambdas, mean over folds of the fold MSE
  std::vector<std::vector<double>> grids;
  std::vector<int> fold_of;   // fold index of each row
};

/// Deterministic fold labels: a seeded shuffle dealt round-robin.
inline std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % folds);
  return fold;
}

inline CvResult cv_select(const MatrixXd& x, const VectorXd& y, const CvOptions& opt = {}) {
  detail::require_finite(x, y);
  const Index n = x.rows();
  if (opt.folds < 2 || n < opt.folds) throw ConfigError("cross-validation needs 2 <= folds <= N");
  if (opt.alphas.empty()) throw ConfigError("empty alpha grid");

  CvResult res;
  res.fold_of = assign_folds(n, opt.folds, opt.seed);
  const auto full = standardize(x, y);
  for (double a : opt.alphas) res.grids.push_back(lambda_grid(full, a, opt.lambda_count, opt.decades));

  const auto A = static_cast<Index>(opt.alphas.size());
  res.cv_errors = MatrixXd::Zero(A, opt.lambda_count);
  for (int fold = 0; fold < opt.folds; ++fold) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (res.fold_of[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
    MatrixXd xtr(static_cast<Index>(train.size()), x.cols()), xte(static_cast<Index>(test.size()), x.cols());
    VectorXd ytr(static_cast<Index>(train.size())), yte(static_cast<Index>(test.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      xtr.row(static_cast<Index>(r)) = x.row(train[r]);
      ytr(static_cast<Index>(r)) = y(train[r]);
    }
    for (std::size_t r = 0; r < test.size(); ++r) {
      xte.row(static_cast<Index>(r)) = x.row(test[r]);
      yte(static_cast<Index>(r)) = y(test[r]);
    }
    const auto s = standardize(xtr, ytr);
    for (Index a = 0; a < A; ++a) {
      const auto path = enet_path(s, opt.alphas[static_cast<std::size_t>(a)], res.grids[static_cast<std::size_t>(a)], opt.enet);
      for (int l = 0; l < opt.lambda_count; ++l) {
        const VectorXd pred = predict_enet(path[static_cast<std::size_t>(l)], xte);
        res.cv_errors(a, l) += (pred - yte).squaredNorm() / static_cast<double>(yte.size());
      }
    }
  }
  res.cv_errors /= static_cast<double>(opt.folds);

  Index best_a = 0, best_l = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index a = 0; a < A; ++a) {
    for (Index l = 0; l < opt.lambda_count; ++l) {
      if (res.cv_errors(a, l) < best) {
        best = res.cv_errors(a, l);
        best_a = a;
        best_l = l;
      }
    }
  }
  res.alpha_mix = opt.alphas[static_cast<std::size_t>(best_a)];
  const auto& grid = res.grids[static_cast<std::size_t>(best_a)];
  res.lambda = grid[static_cast<std::size_t>(best_l)];
  res.cv_error = best;
  const std::vector<double> prefix(grid.begin(), grid.begin() + best_l + 1);
  res.fit = enet_path(full, res.alpha_mix, prefix, opt.enet).back();
  return res;
}

inline CvResult cv_select(const ExpandedDesign& design, const VectorXd& y, const CvOptions& opt = {}) {
  return cv_select(design.matrix, y, opt);
}

}  // namespace pmmp
