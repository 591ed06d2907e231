#pragma once

// Partition of the observations by main-effect category tuple, and the per-group
// sufficient statistics from which every estimator quantity is computed.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmmp/data_model.hpp"

namespace pmmp {

using GroupKey = std::vector<int>;

struct GroupPartition {
  std::vector<GroupKey> keys;              // sorted lexicographically
  std::vector<std::vector<Index>> members; // row indices, ascending
  std::vector<Index> row_group;            // row -> group
  std::vector<int> level_counts;           // C_j + 1 per variable, for key validation

  Index group_count() const { return static_cast<Index>(keys.size()); }
  Index size(Index k) const { return static_cast<Index>(members[static_cast<std::size_t>(k)].size()); }

  Index min_group_size() const {
    Index m = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto n = static_cast<Index>(members[k].size());
      if (k == 0 || n < m) m = n;
    }
    return m;
  }

  std::optional<Index> find(const GroupKey& key) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return std::nullopt;
    return static_cast<Index>(it - keys.begin());
  }

  void check_key(const GroupKey& key) const {
    if (key.size() != level_counts.size()) {
      throw KeyError("group key has " + std::to_string(key.size()) + " entries, expected " + std::to_string(level_counts.size()));
    }
    for (std::size_t j = 0; j < key.size(); ++j) {
      if (key[j] < 0 || key[j] >= level_counts[j]) throw KeyError("group key entry " + std::to_string(j) + " is not a valid category");
    }
  }
};

struct GroupStats {
  Index N = 0;
  VectorXd n;                 // group sizes as reals
  VectorXd ybar;
  MatrixXd xbar;              // K x p
  VectorXd syy;               // within-group sum of squares of y
  std::vector<MatrixXd> sxx;  // within-group scatter, p x p each
  MatrixXd sxy;               // K x p within-group cross-products

  Index group_count() const { return n.size(); }
  Index p() const { return xbar.cols(); }

  MatrixXd within_scatter() const {
    MatrixXd s = MatrixXd::Zero(p(), p());
    for (const auto& m : sxx) s += m;
    return s;
  }
};

inline GroupPartition build_partition(const Dataset& d) {
  std::map<GroupKey, std::vector<Index>> cells;
  GroupKey key(static_cast<std::size_t>(d.q1()));
  for (Index i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.q1(); ++j) key[static_cast<std::size_t>(j)] = d.c(i, j);
    cells[key].push_back(i);
  }
  GroupPartition g;
  g.level_counts = d.schema.categorical.level_counts();
  g.row_group.assign(static_cast<std::size_t>(d.size()), -1);
  for (auto& [k, rows] : cells) {
    const auto idx = static_cast<Index>(g.keys.size());
    for (Index r : rows) g.row_group[static_cast<std::size_t>(r)] = idx;
    g.keys.push_back(k);
    g.members.push_back(std::move(rows));
  }
  return g;
}

inline GroupStats compute_stats(const Dataset& d, const GroupPartition& g) {
  if (static_cast<Index>(g.row_group.size()) != d.size()) throw InvariantError("partition was not built from this dataset");
  const Index K = g.group_count(), p = d.p();
  GroupStats s;
  s.N = d.size();
  s.n.resize(K);
  s.ybar.resize(K);
  s.xbar.resize(K, p);
  s.syy.resize(K);
  s.sxx.assign(static_cast<std::size_t>(K), MatrixXd::Zero(p, p));
  s.sxy = MatrixXd::Zero(K, p);
  for (Index k = 0; k < K; ++k) {
    const auto& rows = g.members[static_cast<std::size_t>(k)];
    const double nk = static_cast<double>(rows.size());
    double ysum = 0.0;
    VectorXd xsum = VectorXd::Zero(p);
    for (Index r : rows) {
      ysum += d.y(r);
      xsum += d.x.row(r).transpose();
    }
    const double ym = ysum / nk;
    const VectorXd xm = xsum / nk;
    double syy = 0.0;
    for (Index r : rows) {
      const double dy = d.y(r) - ym;
      const VectorXd dx = d.x.row(r).transpose() - xm;
      syy += dy * dy;
      s.sxx[static_cast<std::size_t>(k)].noalias() += dx * dx.transpose();
      s.sxy.row(k) += dy * dx.transpose();
    }
    s.n(k) = nk;
    s.ybar(k) = ym;
    s.xbar.row(k) = xm.transpose();
    s.syy(k) = syy;
  }
  return s;
}

/// Rows of a group report: key labels, size, and response mean.
inline std::string group_report_csv(const GroupPartition& g, const GroupStats& s, const CategoricalSchema& schema) {
  std::string out = "group";
  for (const auto& v : schema.variables) out += "," + io::quote_csv(v.name);
  out += ",n,ybar\n";
  for (Index k = 0; k < g.group_count(); ++k) {
    out += std::to_string(k);
    const auto& key = g.keys[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < key.size(); ++j) out += "," + io::quote_csv(schema.variables[j].levels[key[j]]);
    out += "," + std::to_string(g.size(k)) + "," + io::format_double(s.ybar(k)) + "\n";
  }
  return out;
}

}  // namespace pmmp
