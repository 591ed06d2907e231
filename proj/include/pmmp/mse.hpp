#pragma once

// Analytic MSE of the pseudo-EBLUP.
//
// For a row i in group k, to first order
//
//   theta_hat_i - theta_i = L_i (Z alpha - alpha_bar 1) + E_i eps,
//
//   L_i = v_i'W + c_k W3/d - c_k w_k',   E_i = v_i'W + c_k W3/d + gamma_k w_k',
//
// with c_k = 1/(1 + h n_k), gamma_k = 1 - c_k, v_i = x_i - gamma_k xbar_k, and
// w_k' the averaging row over group k. W = W1 (I - 1 W3 / d) where
//
//   M    = sum_k x_[k]' A_k x_[k] = sum_k S_xx,k + omega_k xbar_k xbar_k',
//   s    = sum_k omega_k xbar_k,          omega_k = n_k c_k,
//   W1_j = M^{-1}(x_j - gamma_m xbar_m),   W3_j = c_m - s'M^{-1}(x_j - gamma_m xbar_m),
//   d    = d1 - d2 = sum_k omega_k - s'M^{-1}s,
//
// for j in group m. Every entry of L_i and E_i is affine in x_j within a group,
// so the inner products reduce to sums over groups.

#include <cmath>
#include <vector>

#include "pmmp/predictor.hpp"

namespace pmmp {

struct WDecomposition {
  double h = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d = 0.0;
  MatrixXd M;
  MatrixXd M_inv;
  VectorXd s;       // sum_k omega_k xbar_k
  VectorXd M_inv_s;
  VectorXd c;       // 1 / (1 + h n_k)
  VectorXd gamma;   // h n_k / (1 + h n_k)
  VectorXd n;
  MatrixXd xbar;    // K x p
  MatrixXd within;  // sum_k S_xx,k

  Index p() const { return M.rows(); }

  VectorXd w1_column(const VectorXd& x, Index k) const {
    return M_inv * (x - gamma(k) * xbar.row(k).transpose());
  }

  double w3_entry(const VectorXd& x, Index k) const {
    if (p() == 0) return c(k);
    return c(k) - M_inv_s.dot(x - gamma(k) * xbar.row(k).transpose());
  }

  VectorXd w_column(const VectorXd& x, Index k) const {
    return w1_column(x, k) - M_inv_s * (w3_entry(x, k) / d);
  }
};

struct MseEstimate {
  double value = 0.0;
  double bias = 0.0;      // squared first bracket
  double variance = 0.0;  // R times the squared norm of the second bracket
  double margin = 0.0;    // 2 sqrt(value)
  bool low_signal = false;
};

inline WDecomposition build_w(const GroupStats& stats, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValueError("build_w requires finite h > 0");
  const Index K = stats.group_count(), p = stats.p();
  WDecomposition w;
  w.h = h;
  w.n = stats.n;
  w.xbar = stats.xbar;
  w.c = (1.0 / (1.0 + h * stats.n.array())).matrix();
  w.gamma = (1.0 - w.c.array()).matrix();
  const VectorXd omega = (stats.n.array() * w.c.array()).matrix();
  w.d1 = omega.sum();

  w.within = stats.within_scatter();
  w.M = w.within;
  w.s = VectorXd::Zero(p);
  for (Index k = 0; k < K; ++k) {
    if (p == 0) break;
    const VectorXd xm = stats.xbar.row(k).transpose();
    w.M.noalias() += omega(k) * xm * xm.transpose();
    w.s += omega(k) * xm;
  }
  if (p > 0) {
    const auto [rcond, weakest] = detail::scaled_rcond(w.M);
    if (!(rcond >= 1e-12)) {
      throw RankDeficiencyError("M = sum_k x_k'A_k x_k is singular in the direction of continuous predictor " + std::to_string(weakest));
    }
    w.M_inv = w.M.ldlt().solve(MatrixXd::Identity(p, p));
    w.M_inv_s = w.M_inv * w.s;
    w.d2 = w.s.dot(w.M_inv_s);
  } else {
    w.M_inv.resize(0, 0);
    w.M_inv_s.resize(0);
    w.d2 = 0.0;
  }
  w.d = w.d1 - w.d2;
  if (!(w.d > 0.0)) throw RankDeficiencyError("intercept is not identified beside the continuous predictors (d <= 0)");
  return w;
}

/// MSE estimate for a regression mean at predictors x in fitted group k, with the
/// group effects alpha replaced by their EBLUPs, h by the fitted h, and sigma^2 by R.
inline MseEstimate mse_at(const FittedPmmp& f, const WDecomposition& w, const VectorXd& x, Index k,
                          const VectorXd& alpha_hat) {
  if (std::abs(w.h - f.h) > 1e-12 * std::max(1.0, f.h)) throw InvariantError("W decomposition was built at a different h than the fit");
  if (k < 0 || k >= w.n.size()) throw KeyError("group index out of range");
  const Index K = w.n.size();
  const double ck = w.c(k), gk = w.gamma(k), nk = w.n(k);

  VectorXd g = VectorXd::Zero(w.p());
  double kappa = ck / w.d;
  if (w.p() > 0) {
    const VectorXd v = x - gk * w.xbar.row(k).transpose();
    const VectorXd u = w.M_inv * v;
    kappa = (ck - v.dot(w.M_inv_s)) / w.d;
    g = u - kappa * w.M_inv_s;
  }
  // t_m = g'xbar_m + kappa: the per-group level of the affine row entries.
  const VectorXd t = (w.p() > 0 ? VectorXd(w.xbar * g) : VectorXd::Zero(K)).array() + kappa;

  const double abar = alpha_hat.mean();
  double lin = 0.0;
  double sq = w.p() > 0 ? g.dot(w.within * g) : 0.0;
  for (Index m = 0; m < K; ++m) {
    const double omega = w.n(m) * w.c(m);
    lin += (alpha_hat(m) - abar) * omega * t(m);
    sq += w.n(m) * w.c(m) * w.c(m) * t(m) * t(m);
  }
  lin -= ck * (alpha_hat(k) - abar);
  sq += 2.0 * gk * ck * t(k) + gk * gk / nk;

  MseEstimate e;
  e.bias = lin * lin;
  e.variance = f.R * std::max(sq, 0.0);
  e.value = e.bias + e.variance;
  e.margin = 2.0 * std::sqrt(e.value);
  e.low_signal = f.clamped();
  return e;
}

inline MseEstimate mse_theta(const FittedPmmp& f, const WDecomposition& w, const Dataset& d, Index i) {
  if (i < 0 || i >= d.size() || i >= static_cast<Index>(f.partition.row_group.size())) {
    throw KeyError("row index " + std::to_string(i) + " out of range");
  }
  return mse_at(f, w, d.x.row(i).transpose(), f.partition.row_group[static_cast<std::size_t>(i)], alpha_hats(f));
}

struct Margin {
  double theta = 0.0;
  MseEstimate mse;
};

/// Pseudo-EBLUP and its margin of error 2 sqrt(MSE) for every fitted row.
inline std::vector<Margin> margins(const FittedPmmp& f, const Dataset& d) {
  const WDecomposition w = build_w(f.stats, f.h);
  const VectorXd alpha = alpha_hats(f);
  const VectorXd theta = predict_all(f, d);
  std::vector<Margin> out(static_cast<std::size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) {
    out[static_cast<std::size_t>(i)] = {theta(i), mse_at(f, w, d.x.row(i).transpose(), f.partition.row_group[static_cast<std::size_t>(i)], alpha)};
  }
  return out;
}

/// Dense p x N matrix W and 1 x N row W3 in the row order of d, for verification.
inline MatrixXd materialize_w(const WDecomposition& w, const Dataset& d, const GroupPartition& g) {
  MatrixXd out(w.p(), d.size());
  for (Index i = 0; i < d.size(); ++i) out.col(i) = w.w_column(d.x.row(i).transpose(), g.row_group[static_cast<std::size_t>(i)]);
  return out;
}

inline VectorXd materialize_w3(const WDecomposition& w, const Dataset& d, const GroupPartition& g) {
  VectorXd out(d.size());
  for (Index i = 0; i < d.size(); ++i) out(i) = w.w3_entry(d.x.row(i).transpose(), g.row_group[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace pmmp
