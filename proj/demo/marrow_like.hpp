#pragma once

// Synthetic data shaped like a pediatric transplant registry: 187 patients,
// 6 continuous and 8 categorical predictors (one with 4 levels, one with 7,
// six binary), a positive survival-time response, and 21 incomplete rows.
// Complete rows fall into exactly 130 distinct category combinations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pmmp/design.hpp"
#include "pmmp/io.hpp"

namespace marrow {

inline constexpr int kRows = 187;
inline constexpr int kComplete = 166;
inline constexpr int kGroups = 130;

inline pmmp::DataSchema schema() {
  pmmp::DataSchema s;
  s.response = "survival_time";
  s.continuous = {"donor_age", "recipient_age", "CD34_dose", "CD3_dose", "ANC_recovery", "PLT_recovery"};
  auto var = [](std::string name, std::vector<std::string> levels) {
    pmmp::CategoricalVariable v;
    v.name = std::move(name);
    v.levels = std::move(levels);
    return v;
  };
  s.categorical.variables = {
      var("CMV_status", {"0", "1", "2", "3"}),
      var("HLA_group_1", {"0", "1", "2", "3", "4", "5", "6"}),
      var("recipient_gender", {"F", "M"}),
      var("stem_cell_source", {"bone_marrow", "peripheral_blood"}),
      var("ABO_match", {"matched", "mismatched"}),
      var("risk_group", {"low", "high"}),
      var("disease_group", {"nonmalignant", "malignant"}),
      var("HLA_mismatch", {"matched", "mismatched"}),
  };
  s.categorical.interactions = pmmp::all_interactions(8, 3);
  return s;
}

/// CSV text of the synthetic registry; deterministic in `seed`.
inline std::string make_csv(std::uint64_t seed = 2024) {
  const auto s = schema();
  const auto& vars = s.categorical.variables;
  std::mt19937_64 rng(seed);
  auto level = [&](std::size_t j) {
    std::uniform_int_distribution<int> pick(0, vars[j].level_count() - 1);
    return pick(rng);
  };

  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> tuples;
  while (static_cast<int>(tuples.size()) < kGroups) {
    std::vector<int> t(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) t[j] = level(j);
    if (seen.insert(t).second) tuples.push_back(t);
  }
  std::vector<std::vector<int>> complete_keys = tuples;
  std::uniform_int_distribution<int> any_group(0, kGroups - 1);
  while (static_cast<int>(complete_keys.size()) < kComplete) complete_keys.push_back(tuples[static_cast<std::size_t>(any_group(rng))]);
  std::shuffle(complete_keys.begin(), complete_keys.end(), rng);

  std::vector<double> effect(static_cast<std::size_t>(kGroups));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& e : effect) e = 0.4 * normal(rng);

  std::vector<bool> incomplete(kRows, false);
  {
    std::vector<int> idx(kRows);
    for (int i = 0; i < kRows; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < kRows - kComplete; ++i) incomplete[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;
  }

  const std::vector<double> mean{30, 9, 10, 5, 16, 30}, sd{9, 5, 6, 4, 4, 15};
  std::string out = s.response;
  for (const auto& c : s.continuous) out += "," + c;
  for (const auto& v : vars) out += "," + v.name;
  out += "\n";
  std::size_t next_complete = 0;
  const std::size_t ncol = 1 + s.continuous.size() + vars.size();
  std::uniform_int_distribution<std::size_t> any_col(0, ncol - 1);
  for (int i = 0; i < kRows; ++i) {
    std::vector<int> key;
    double group_effect = 0.0;
    if (incomplete[static_cast<std::size_t>(i)]) {
      for (std::size_t j = 0; j < vars.size(); ++j) key.push_back(level(j));
    } else {
      key = complete_keys[next_complete++];
      group_effect = effect[static_cast<std::size_t>(std::find(tuples.begin(), tuples.end(), key) - tuples.begin())];
    }
    std::vector<double> x(s.continuous.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::max(0.1, mean[j] + sd[j] * normal(rng));
    const double log_t = 6.0 + 0.02 * (x[2] - 10.0) - 0.03 * (x[1] - 9.0) + group_effect + 0.3 * normal(rng);

    std::vector<std::string> cells;
    cells.push_back(pmmp::io::format_double(std::round(std::exp(log_t))));
    for (double v : x) cells.push_back(pmmp::io::format_double(std::round(v * 100.0) / 100.0));
    for (std::size_t j = 0; j < vars.size(); ++j) cells.push_back(vars[j].levels[static_cast<std::size_t>(key[j])]);
    if (incomplete[static_cast<std::size_t>(i)]) cells[any_col(rng)] = "";
    for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + cells[c];
    out += "\n";
  }
  return out;
}

}  // namespace marrow
