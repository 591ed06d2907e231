#pragma once

// Reference-cell indicator expansion of the categorical terms.

#include <string>
#include <vector>

#include "pmmp/data_model.hpp"

namespace pmmp {

struct ExpandedDesign {
  MatrixXd matrix;                  // N x P, continuous columns first, no intercept
  std::vector<std::string> labels;  // one per column
  std::vector<Term> terms;          // canonical order used for the indicator blocks
  Index continuous_count = 0;

  Index predictor_count() const { return matrix.cols(); }
};

/// Every interaction of order 2..max_order among q1 variables, by order then lexicographically.
inline std::vector<Term> all_interactions(int q1, int max_order) {
  CategoricalSchema tmp;
  tmp.variables.resize(static_cast<std::size_t>(q1));
  detail::add_all_interactions(tmp, max_order);
  return tmp.interactions;
}

/// Indicator count a term contributes: the product of its members' non-reference level counts.
inline Index term_width(const CategoricalSchema& schema, const Term& term) {
  Index w = 1;
  for (int v : term) w *= schema.variables[v].level_count() - 1;
  return w;
}

inline ExpandedDesign expand(const Dataset& d, const std::vector<Term>& requested) {
  const auto& schema = d.schema.categorical;
  ExpandedDesign out;
  out.terms = canonical_terms(schema, requested);
  out.continuous_count = d.p();

  Index width = d.p();
  for (const auto& t : out.terms) width += term_width(schema, t);
  out.matrix = MatrixXd::Zero(d.size(), width);
  out.labels.reserve(static_cast<std::size_t>(width));

  if (d.p() > 0) out.matrix.leftCols(d.p()) = d.x;
  for (const auto& name : d.schema.continuous) out.labels.push_back(name);

  Index col = d.p();
  for (const auto& t : out.terms) {
    for (const auto& tuple : non_reference_tuples(schema, t)) {
      std::string label;
      for (std::size_t m = 0; m < t.size(); ++m) {
        const auto& var = schema.variables[t[m]];
        label += (m ? ":" : "") + var.name + "=" + var.levels[tuple[m]];
      }
      out.labels.push_back(std::move(label));
      for (Index i = 0; i < d.size(); ++i) {
        bool hit = true;
        for (std::size_t m = 0; m < t.size() && hit; ++m) hit = d.c(i, t[m]) == tuple[m];
        if (hit) out.matrix(i, col) = 1.0;
      }
      ++col;
    }
  }
  return out;
}

inline std::string design_to_csv(const ExpandedDesign& e) {
  std::string out;
  for (std::size_t j = 0; j < e.labels.size(); ++j) out += (j ? "," : "") + io::quote_csv(e.labels[j]);
  out += '\n';
  for (Index i = 0; i < e.matrix.rows(); ++i) {
    for (Index j = 0; j < e.matrix.cols(); ++j) out += (j ? "," : "") + io::format_double(e.matrix(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace pmmp
