#pragma once

// Pseudo-EBLUPs of the group effects and of the regression means.

#include <optional>
#include <vector>

#include "pmmp/estimator.hpp"

namespace pmmp {

struct PredictionResult {
  double theta = 0.0;
  double alpha = 0.0;             // 0 for a group that was not seen in fitting
  std::optional<Index> group;     // empty when unseen
  double shrinkage = 0.0;         // gamma_k = h n_k / (1 + h n_k); 0 when unseen

  bool unseen() const { return !group.has_value(); }
};

inline double shrinkage_factor(double h, double n) { return h * n / (1.0 + h * n); }

namespace detail {

// Sequential dot product so batch and single-row predictions agree bit for bit.
template <class Row>
double linear_part(const Row& x, const VectorXd& b) {
  double s = 0.0;
  for (Index j = 0; j < b.size(); ++j) s += x(j) * b(j);
  return s;
}

inline double alpha_hat(const FittedPmmp& f, Index k) {
  const double r = f.stats.ybar(k) - f.b0 - linear_part(f.stats.xbar.row(k), f.b);
  return shrinkage_factor(f.h, f.stats.n(k)) * r;
}

}  // namespace detail

/// alpha_k = gamma_k (ybar_k - b0 - xbar_k'b) at the fitted parameters.
inline VectorXd alpha_hats(const FittedPmmp& f) {
  VectorXd a(f.stats.group_count());
  for (Index k = 0; k < a.size(); ++k) a(k) = detail::alpha_hat(f, k);
  return a;
}

inline PredictionResult predict_theta(const FittedPmmp& f, const VectorXd& x, const GroupKey& key) {
  if (x.size() != f.b.size()) {
    throw ValueError("predictor vector has length " + std::to_string(x.size()) + ", model expects " + std::to_string(f.b.size()));
  }
  f.partition.check_key(key);
  PredictionResult out;
  out.theta = f.b0 + detail::linear_part(x, f.b);
  if (auto k = f.partition.find(key)) {
    out.group = *k;
    out.shrinkage = shrinkage_factor(f.h, f.stats.n(*k));
    out.alpha = detail::alpha_hat(f, *k);
    out.theta += out.alpha;
  }
  return out;
}

/// Fitted regression means of every row of the data the model was fitted on.
inline VectorXd predict_all(const FittedPmmp& f, const Dataset& d) {
  if (static_cast<Index>(f.partition.row_group.size()) != d.size() || d.p() != f.b.size()) {
    throw InvariantError("dataset does not match the fitted model");
  }
  const VectorXd alpha = alpha_hats(f);
  VectorXd theta(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    theta(i) = f.b0 + detail::linear_part(d.x.row(i), f.b) + alpha(f.partition.row_group[static_cast<std::size_t>(i)]);
  }
  return theta;
}

}  // namespace pmmp
