#pragma once

// Regularized maximum likelihood for the working mixed model
//
//   y_kl = b0 + x_kl'b + alpha_k + e_kl,   alpha ~ N(0, G I),  e ~ N(0, R I),
//
// parameterized by h = G/R. With H = I + h ZZ' the covariance is block diagonal
// and each block inverts in closed form,
//
//   H_k^{-1} = I - h/(1 + h n_k) J,
//
// so for any two vectors u, v restricted to group k
//
//   u'H_k^{-1}v = S_uv,k + n_k/(1 + h n_k) * ubar_k vbar_k.
//
// Everything below is evaluated from group sufficient statistics through that
// identity; no N x N matrix is ever formed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pmmp/grouping.hpp"

namespace pmmp {

struct GlsSolution {
  double b0 = 0.0;
  VectorXd b;
  double R = 0.0;
  double h_used = 0.0;
};

struct RootSearchOptions {
  double h_max = 1e6;
  double grid_start = 1e-8;  // geometric scan {0} U {grid_start * 2^m}
  double tolerance = 1e-10;  // absolute, on h
  int max_iterations = 200;
};

struct HSolution {
  double h = 0.0;
  bool clamped = false;  // no admissible root; h is the floor h_N
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  int candidate_roots = 0;
};

struct FitConfig {
  double delta = 0.1;             // h_N = delta / sqrt(n_*)
  int extra_iterations = 0;       // additional GLS / variance-ratio alternations beyond the two-pass procedure
  RootSearchOptions root;
  double rcond_threshold = 1e-12;
};

struct FittedPmmp {
  double b0 = 0.0;
  VectorXd b;
  double R = 0.0;
  double h = 0.0;    // max(solved h, h_N); the value the EBLUPs use
  double h_N = 0.0;
  double G = 0.0;    // h * R

  GlsSolution initial;   // GLS at h = h_N
  HSolution initial_h;   // variance ratio at the initial GLS fit
  HSolution final_h;     // variance ratio at the refit
  GlsSolution final_gls; // GLS refit at max(initial h, h_N)

  GroupPartition partition;
  GroupStats stats;
  std::vector<std::string> warnings;

  bool clamped() const { return final_h.clamped || final_h.h < h_N; }
};

namespace detail {

inline VectorXd group_weights(const GroupStats& s, double h) {
  return (s.n.array() / (1.0 + h * s.n.array())).matrix();
}

// Scaled eigen-analysis of a small SPD matrix: returns the reciprocal condition
// number after unit-diagonal scaling and the index dominating the weakest direction.
inline std::pair<double, Index> scaled_rcond(const MatrixXd& a) {
  const VectorXd diag = a.diagonal();
  if ((diag.array() <= 0.0).any()) {
    Index bad = 0;
    diag.minCoeff(&bad);
    return {0.0, bad};
  }
  const VectorXd inv_sqrt = diag.array().rsqrt().matrix();
  const MatrixXd scaled = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(scaled);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(eig.eigenvalues().size() - 1);
  Index weakest = 0;
  eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&weakest);
  return {hi > 0.0 ? std::max(lo, 0.0) / hi : 0.0, weakest};
}

inline std::string coefficient_name(Index idx) {
  return idx == 0 ? std::string("intercept") : "slope " + std::to_string(idx - 1);
}

}  // namespace detail

/// Group residuals r_k = ybar_k - b0 - xbar_k'b.
inline VectorXd group_residuals(const GroupStats& s, double b0, const VectorXd& b) {
  VectorXd r = s.ybar.array() - b0;
  if (s.p() > 0) r -= s.xbar * b;
  return r;
}

/// Weighted normal equations for (b0, b) at fixed h, and the ML variance R.
inline GlsSolution gls_solve(const GroupStats& s, double h, double rcond_threshold = 1e-12) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw ValueError("gls_solve requires finite h >= 0");
  const Index p = s.p(), K = s.group_count();
  const VectorXd w = detail::group_weights(s, h);

  // A = X'H^{-1}X, rhs = X'H^{-1}y with X = [1, X1].
  MatrixXd a = MatrixXd::Zero(p + 1, p + 1);
  VectorXd rhs = VectorXd::Zero(p + 1);
  VectorXd m(p + 1);
  for (Index k = 0; k < K; ++k) {
    m(0) = 1.0;
    if (p > 0) m.tail(p) = s.xbar.row(k).transpose();
    a.noalias() += w(k) * m * m.transpose();
    rhs += w(k) * s.ybar(k) * m;
    if (p > 0) {
      a.bottomRightCorner(p, p) += s.sxx[static_cast<std::size_t>(k)];
      rhs.tail(p) += s.sxy.row(k).transpose();
    }
  }

  const auto [rcond, weakest] = detail::scaled_rcond(a);
  if (!(rcond >= rcond_threshold)) {
    throw RankDeficiencyError("normal equations are singular in the direction of the " + detail::coefficient_name(weakest) +
                              " (dimension " + std::to_string(p + 1) + ", reciprocal condition " + io::format_double(rcond) + ")");
  }
  const VectorXd beta = a.ldlt().solve(rhs);

  GlsSolution out;
  out.h_used = h;
  out.b0 = beta(0);
  out.b = beta.tail(p);

  // Residual quadratic form e'H^{-1}e, group by group:
  //   S_ee,k = S_yy,k - 2 b'S_xy,k + b'S_xx,k b,  ebar_k = r_k.
  const VectorXd r = group_residuals(s, out.b0, out.b);
  double q = 0.0;
  for (Index k = 0; k < K; ++k) {
    double see = s.syy(k);
    if (p > 0) {
      see += -2.0 * s.sxy.row(k).dot(out.b) + out.b.dot(s.sxx[static_cast<std::size_t>(k)] * out.b);
    }
    q += std::max(see, 0.0) + w(k) * r(k) * r(k);
  }
  out.R = q / static_cast<double>(s.N);
  return out;
}

/// dQ/dh: sum_k n_k/(1+h n_k) * [1 - n_k r_k^2 / (R (1 + h n_k))].
inline double h_score(const GroupStats& s, double b0, const VectorXd& b, double R, double h) {
  const VectorXd r = group_residuals(s, b0, b);
  double total = 0.0;
  for (Index k = 0; k < s.group_count(); ++k) {
    const double denom = 1.0 + h * s.n(k);
    const double w = s.n(k) / denom;
    total += w * (1.0 - s.n(k) * r(k) * r(k) / (R * denom));
  }
  return total;
}

/// log|H| = sum_k log(1 + n_k h).
inline double log_det_h(const GroupStats& s, double h) {
  return (1.0 + h * s.n.array()).log().sum();
}

/// -2 log-likelihood of the working model, including the constant N log(2 pi).
inline double neg2_loglik(const GroupStats& s, double b0, const VectorXd& b, double R, double h) {
  const VectorXd r = group_residuals(s, b0, b);
  const VectorXd w = detail::group_weights(s, h);
  double q = 0.0;
  for (Index k = 0; k < s.group_count(); ++k) {
    double see = s.syy(k);
    if (s.p() > 0) see += -2.0 * s.sxy.row(k).dot(b) + b.dot(s.sxx[static_cast<std::size_t>(k)] * b);
    q += see + w(k) * r(k) * r(k);
  }
  const double N = static_cast<double>(s.N);
  return N * std::log(2.0 * std::numbers::pi) + N * std::log(R) + log_det_h(s, h) + q / R;
}

namespace detail {

// h-dependent part of Q at fixed (b0, b, R); used to rank competing roots.
inline double h_profile(const GroupStats& s, const VectorXd& r, double R, double h) {
  double v = 0.0;
  for (Index k = 0; k < s.group_count(); ++k) {
    const double denom = 1.0 + h * s.n(k);
    v += std::log(denom) + s.n(k) * r(k) * r(k) / (denom * R);
  }
  return v;
}

}  // namespace detail

/// Root of h_score on [0, h_max]. A geometric scan locates every sign change
/// from negative to positive (local minima of Q in h); each is refined by
/// bisection and the one with the smallest Q wins. Without such a change the
/// floor h_N is returned and the result is marked clamped.
inline HSolution solve_h(const GroupStats& s, double b0, const VectorXd& b, double R, double h_N,
                         const RootSearchOptions& opt = {}) {
  if (!(R >= 0.0)) throw ValueError("solve_h requires R > 0");
  if (R == 0.0) {
    // Exact fit: every group residual is zero and the score is positive for all h.
    HSolution exact;
    exact.h = h_N;
    exact.clamped = true;
    exact.bracket_hi = opt.h_max;
    return exact;
  }
  auto score = [&](double h) { return h_score(s, b0, b, R, h); };

  std::vector<double> grid{0.0};
  for (double g = opt.grid_start; g < opt.h_max; g *= 2.0) grid.push_back(g);
  grid.push_back(opt.h_max);

  HSolution best;
  best.h = h_N;
  best.clamped = true;
  double best_profile = std::numeric_limits<double>::infinity();
  const VectorXd r = group_residuals(s, b0, b);

  double prev_h = grid[0], prev_f = score(prev_h);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur_h = grid[i], cur_f = score(cur_h);
    if (prev_f < 0.0 && cur_f >= 0.0) {
      double lo = prev_h, hi = cur_h;
      int it = 0;
      if (cur_f > 0.0) {
        while (hi - lo > opt.tolerance && it < opt.max_iterations) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          const double fm = score(mid);
          ++it;
          if (fm < 0.0) {
            lo = mid;
          } else if (fm > 0.0) {
            hi = mid;
          } else {
            lo = hi = mid;
          }
        }
      } else {
        lo = cur_h;
      }
      const double root = 0.5 * (lo + hi);
      const double prof = detail::h_profile(s, r, R, root);
      ++best.candidate_roots;
      if (prof < best_profile) {
        best_profile = prof;
        best.h = root;
        best.clamped = false;
        best.bracket_lo = lo;
        best.bracket_hi = hi;
        best.iterations = it;
      }
    }
    prev_h = cur_h;
    prev_f = cur_f;
  }
  if (best.clamped) {
    best.bracket_lo = 0.0;
    best.bracket_hi = opt.h_max;
  }
  return best;
}

/// Assumption diagnostics that can be checked from data alone.
inline std::vector<std::string> assumption_warnings(const GroupStats& s, Index n_star, double h_N) {
  std::vector<std::string> out;
  if (n_star < 2) out.push_back("smallest group has " + std::to_string(n_star) + " observation(s); group-size growth assumption is violated");
  if (h_N * static_cast<double>(n_star) < 1.0) {
    out.push_back("h_N * n_* = " + io::format_double(h_N * static_cast<double>(n_star)) + " < 1; regularizer floor may dominate small groups");
  }
  if (s.p() > 0) {
    const MatrixXd within = s.within_scatter() / static_cast<double>(s.N);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(within, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    if (lmin < 1e-8) {
      out.push_back("within-group scatter of the continuous predictors is near singular (min eigenvalue " + io::format_double(lmin) +
                    "); slope estimates rely on between-group variation");
    }
  }
  return out;
}

inline FittedPmmp fit(GroupPartition partition, GroupStats stats, const FitConfig& cfg = {}) {
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be positive");
  FittedPmmp f;
  const Index n_star = partition.min_group_size();
  f.h_N = cfg.delta / std::sqrt(static_cast<double>(n_star));

  // Initial GLS at the floor, then the score root.
  f.initial = gls_solve(stats, f.h_N, cfg.rcond_threshold);
  f.initial_h = solve_h(stats, f.initial.b0, f.initial.b, f.initial.R, f.h_N, cfg.root);
  double h_step = std::max(f.initial_h.h, f.h_N);
  // Refit at the floored root and solve again, optionally repeated.
  for (int pass = 0; pass <= cfg.extra_iterations; ++pass) {
    f.final_gls = gls_solve(stats, h_step, cfg.rcond_threshold);
    f.final_h = solve_h(stats, f.final_gls.b0, f.final_gls.b, f.final_gls.R, f.h_N, cfg.root);
    h_step = std::max(f.final_h.h, f.h_N);
  }
  // Predictions use the floored ratio.
  f.b0 = f.final_gls.b0;
  f.b = f.final_gls.b;
  f.R = f.final_gls.R;
  f.h = std::max(f.final_h.h, f.h_N);
  f.G = f.h * f.R;

  f.warnings = assumption_warnings(stats, n_star, f.h_N);
  if (f.R == 0.0) f.warnings.push_back("residual variance is zero; the response is reproduced exactly");
  if (f.final_h.clamped) f.warnings.push_back("score equation for h has no root; h set to the floor h_N");
  f.partition = std::move(partition);
  f.stats = std::move(stats);
  return f;
}

inline FittedPmmp fit(const Dataset& d, const FitConfig& cfg = {}) {
  auto g = build_partition(d);
  auto s = compute_stats(d, g);
  return fit(std::move(g), std::move(s), cfg);
}

}  // namespace pmmp
