#pragma once

// Dataset schema, validation, CSV ingestion/export, and the simulation-side true model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pmmp/errors.hpp"
#include "pmmp/io.hpp"

namespace pmmp {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using LevelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Main-effect variable indices of a model term, strictly increasing. A single
/// index is a main effect; two or more form an interaction.
using Term = std::vector<int>;

struct CategoricalVariable {
  std::string name;
  std::vector<std::string> levels;  // ordered category labels
  int reference = 0;                // index into levels carrying no indicator

  int level_count() const { return static_cast<int>(levels.size()); }

  std::optional<int> index_of(const std::string& label) const {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k] == label) return static_cast<int>(k);
    }
    return std::nullopt;
  }
};

struct CategoricalSchema {
  std::vector<CategoricalVariable> variables;  // the main effects, j = 0..q1-1
  std::vector<Term> interactions;

  int q1() const { return static_cast<int>(variables.size()); }

  std::vector<int> level_counts() const {
    std::vector<int> out;
    out.reserve(variables.size());
    for (const auto& v : variables) out.push_back(v.level_count());
    return out;
  }

  std::optional<int> variable_index(const std::string& name) const {
    for (std::size_t j = 0; j < variables.size(); ++j) {
      if (variables[j].name == name) return static_cast<int>(j);
    }
    return std::nullopt;
  }

  void validate() const {
    std::set<std::string> names;
    for (const auto& v : variables) {
      if (v.name.empty()) throw SchemaError("categorical variable with empty name");
      if (!names.insert(v.name).second) throw SchemaError("duplicate categorical variable '" + v.name + "'");
      if (v.levels.empty()) throw SchemaError("variable '" + v.name + "' declares no categories");
      std::set<std::string> seen;
      for (const auto& l : v.levels) {
        if (!seen.insert(l).second) throw SchemaError("variable '" + v.name + "' repeats category label '" + l + "'");
      }
      if (v.reference < 0 || v.reference >= v.level_count()) {
        throw SchemaError("variable '" + v.name + "' has invalid reference index " + std::to_string(v.reference));
      }
    }
    for (const auto& t : interactions) validate_term(t, /*require_interaction=*/true);
  }

  void validate_term(const Term& t, bool require_interaction = false) const {
    if (t.empty()) throw ConfigError("empty model term");
    if (require_interaction && t.size() < 2) throw SchemaError("interaction term must involve at least two variables");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < 0 || t[i] >= q1()) throw ConfigError("model term references unknown variable index " + std::to_string(t[i]));
      if (i > 0 && t[i] <= t[i - 1]) throw ConfigError("model term variables must be distinct and increasing");
    }
  }
};

/// Column roles of a data file.
struct DataSchema {
  std::string response;
  std::vector<std::string> continuous;
  CategoricalSchema categorical;
};

struct Standardization {
  VectorXd mean;
  VectorXd scale;  // sample standard deviation
};

struct Dataset {
  VectorXd y;
  MatrixXd x;      // N x p continuous predictors
  LevelMatrix c;   // N x q1 category indices, 0-based into the schema's labels
  DataSchema schema;
  std::optional<Standardization> standardization;
  bool log_response = false;

  Index size() const { return y.size(); }
  Index p() const { return x.cols(); }
  int q1() const { return schema.categorical.q1(); }

  void validate() const {
    schema.categorical.validate();
    const Index n = y.size();
    if (n < 1) throw ValueError("dataset has no observations");
    if (x.rows() != n || c.rows() != n) throw InvariantError("dataset component row counts disagree");
    if (x.cols() != static_cast<Index>(schema.continuous.size())) throw InvariantError("continuous column count mismatch");
    if (c.cols() != q1()) throw InvariantError("categorical column count mismatch");
    if (!y.allFinite() || !x.allFinite()) throw ValueError("dataset contains non-finite values");
    for (int j = 0; j < q1(); ++j) {
      const int levels = schema.categorical.variables[j].level_count();
      for (Index i = 0; i < n; ++i) {
        if (c(i, j) < 0 || c(i, j) >= levels) {
          throw SchemaError("row " + std::to_string(i) + ": category index out of range for '" +
                            schema.categorical.variables[j].name + "'");
        }
      }
    }
  }
};

struct IngestOptions {
  bool standardize_continuous = false;
  bool log_response = false;
  bool drop_incomplete = false;
  /// When set, continuous columns are transformed with these parameters instead of
  /// statistics of the file itself (used to score new data against a fitted model).
  std::optional<Standardization> fixed_standardization;
  /// Allow the response column to be absent; y is then filled with zeros.
  bool response_optional = false;
};

// ---------------------------------------------------------------------------
// JSON sidecar for schemas

inline nlohmann::json schema_to_json(const DataSchema& s) {
  nlohmann::json j;
  j["response"] = s.response;
  j["continuous"] = s.continuous;
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& v : s.categorical.variables) {
    cats.push_back({{"name", v.name}, {"levels", v.levels}, {"reference", v.levels.at(v.reference)}});
  }
  j["categorical"] = cats;
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& t : s.categorical.interactions) {
    nlohmann::json names = nlohmann::json::array();
    for (int idx : t) names.push_back(s.categorical.variables.at(idx).name);
    inter.push_back(names);
  }
  j["interactions"] = inter;
  return j;
}

namespace detail {

inline void add_all_interactions(CategoricalSchema& cs, int max_order) {
  const int q1 = cs.q1();
  std::vector<Term> out;
  for (int order = 2; order <= std::min(max_order, q1); ++order) {
    // Combinations of size `order` in lexicographic order.
    std::vector<int> idx(order);
    for (int i = 0; i < order; ++i) idx[i] = i;
    while (true) {
      out.push_back(idx);
      int i = order - 1;
      while (i >= 0 && idx[i] == q1 - order + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int k = i + 1; k < order; ++k) idx[k] = idx[k - 1] + 1;
    }
  }
  for (auto& t : out) {
    if (std::find(cs.interactions.begin(), cs.interactions.end(), t) == cs.interactions.end()) cs.interactions.push_back(t);
  }
}

}  // namespace detail

/// Parses a schema sidecar. `reference` may be a label or a 0-based index and
/// defaults to the first category; `max_interaction_order` adds every
/// interaction up to that order after any explicitly listed ones.
inline DataSchema schema_from_json(const nlohmann::json& j) {
  DataSchema s;
  try {
    s.response = j.value("response", std::string{});
    if (j.contains("continuous")) s.continuous = j.at("continuous").get<std::vector<std::string>>();
    for (const auto& cj : j.at("categorical")) {
      CategoricalVariable v;
      v.name = cj.at("name").get<std::string>();
      for (const auto& l : cj.at("levels")) v.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
      if (cj.contains("reference")) {
        const auto& r = cj.at("reference");
        if (r.is_number_integer()) {
          v.reference = r.get<int>();
        } else {
          const std::string label = r.is_string() ? r.get<std::string>() : r.dump();
          auto idx = v.index_of(label);
          if (!idx) throw SchemaError("reference '" + label + "' is not a category of '" + v.name + "'");
          v.reference = *idx;
        }
      }
      s.categorical.variables.push_back(std::move(v));
    }
    if (j.contains("interactions")) {
      for (const auto& tj : j.at("interactions")) {
        Term t;
        for (const auto& name : tj) {
          auto idx = s.categorical.variable_index(name.get<std::string>());
          if (!idx) throw SchemaError("interaction references unknown variable '" + name.get<std::string>() + "'");
          t.push_back(*idx);
        }
        s.categorical.interactions.push_back(std::move(t));
      }
    }
    if (j.contains("max_interaction_order")) detail::add_all_interactions(s.categorical, j.at("max_interaction_order").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema JSON: ") + e.what());
  }
  s.categorical.validate();
  return s;
}

inline DataSchema read_schema(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return schema_from_json(j);
}

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

inline bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

inline std::string where(const io::CsvTable& t, std::size_t r, const std::string& col) {
  return "line " + std::to_string(t.line_numbers[r]) + ", column '" + col + "'";
}

}  // namespace detail

inline Dataset ingest_table(const io::CsvTable& table, const DataSchema& schema, const IngestOptions& opt = {}) {
  schema.categorical.validate();
  const auto& cats = schema.categorical.variables;

  auto require = [&](const std::string& name) {
    auto col = table.column(name);
    if (!col) throw SchemaError("missing column '" + name + "'");
    return *col;
  };
  std::optional<std::size_t> ycol;
  if (!schema.response.empty()) {
    ycol = table.column(schema.response);
    if (!ycol && !opt.response_optional) throw SchemaError("missing column '" + schema.response + "'");
  } else if (!opt.response_optional) {
    throw SchemaError("schema does not name a response column");
  }
  std::vector<std::size_t> xcols, ccols;
  for (const auto& name : schema.continuous) xcols.push_back(require(name));
  for (const auto& v : cats) ccols.push_back(require(v.name));

  const std::size_t p = xcols.size(), q1 = ccols.size();
  std::vector<double> ys;
  std::vector<double> xs;
  std::vector<int> cs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool incomplete = false;
    auto missing = [&](std::size_t col, const std::string& name) {
      if (!detail::is_missing(row[col])) return false;
      if (!opt.drop_incomplete) throw SchemaError(detail::where(table, r, name) + ": missing value");
      incomplete = true;
      return true;
    };
    double yv = 0.0;
    if (ycol && !missing(*ycol, schema.response)) {
      auto v = io::parse_double(row[*ycol]);
      if (!v) throw SchemaError(detail::where(table, r, schema.response) + ": not a number: '" + row[*ycol] + "'");
      yv = *v;
    }
    std::vector<double> xrow(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      if (missing(xcols[j], schema.continuous[j])) continue;
      auto v = io::parse_double(row[xcols[j]]);
      if (!v) throw SchemaError(detail::where(table, r, schema.continuous[j]) + ": not a number: '" + row[xcols[j]] + "'");
      xrow[j] = *v;
    }
    std::vector<int> crow(q1, 0);
    for (std::size_t j = 0; j < q1; ++j) {
      if (missing(ccols[j], cats[j].name)) continue;
      auto idx = cats[j].index_of(row[ccols[j]]);
      if (!idx) throw SchemaError(detail::where(table, r, cats[j].name) + ": unknown category label '" + row[ccols[j]] + "'");
      crow[j] = *idx;
    }
    if (incomplete) continue;
    ys.push_back(yv);
    xs.insert(xs.end(), xrow.begin(), xrow.end());
    cs.insert(cs.end(), crow.begin(), crow.end());
  }

  Dataset d;
  d.schema = schema;
  const Index n = static_cast<Index>(ys.size());
  if (n < 1) throw ValueError("no complete observations");
  d.y = Eigen::Map<VectorXd>(ys.data(), n);
  d.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, static_cast<Index>(p));
  d.c = Eigen::Map<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cs.data(), n, static_cast<Index>(q1));

  if (opt.log_response) {
    for (Index i = 0; i < n; ++i) {
      if (!(d.y(i) > 0.0)) throw ValueError("log-response requires positive responses; row " + std::to_string(i) + " has " + io::format_double(d.y(i)));
    }
    d.y = d.y.array().log().matrix();
    d.log_response = true;
  }

  if (opt.fixed_standardization) {
    const auto& st = *opt.fixed_standardization;
    if (st.mean.size() != static_cast<Index>(p) || st.scale.size() != static_cast<Index>(p)) {
      throw SchemaError("standardization parameters do not match the continuous columns");
    }
    for (Index j = 0; j < d.p(); ++j) d.x.col(j) = ((d.x.col(j).array() - st.mean(j)) / st.scale(j)).matrix();
    d.standardization = st;
  } else if (opt.standardize_continuous && p > 0) {
    if (n < 2) throw ValueError("standardization needs at least two observations");
    Standardization st{VectorXd(p), VectorXd(p)};
    for (Index j = 0; j < d.p(); ++j) {
      const double mean = d.x.col(j).mean();
      const double var = (d.x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
      if (!(var > 0.0)) throw ValueError("continuous column '" + schema.continuous[j] + "' has zero variance");
      st.mean(j) = mean;
      st.scale(j) = std::sqrt(var);
      d.x.col(j) = ((d.x.col(j).array() - mean) / st.scale(j)).matrix();
    }
    d.standardization = st;
  }
  d.validate();
  return d;
}

inline Dataset ingest_csv(const std::filesystem::path& path, const DataSchema& schema, const IngestOptions& opt = {}) {
  return ingest_table(io::read_csv(path), schema, opt);
}

/// Writes the dataset as CSV (response, continuous, categorical labels) with 17
/// significant digits, and the schema as a JSON sidecar.
inline std::string dataset_to_csv(const Dataset& d) {
  std::string out;
  std::vector<std::string> header{d.schema.response.empty() ? std::string("y") : d.schema.response};
  for (const auto& n : d.schema.continuous) header.push_back(n);
  for (const auto& v : d.schema.categorical.variables) header.push_back(v.name);
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + io::quote_csv(header[j]);
  out += '\n';
  for (Index i = 0; i < d.size(); ++i) {
    out += io::format_double(d.y(i));
    for (Index j = 0; j < d.p(); ++j) out += "," + io::format_double(d.x(i, j));
    for (int j = 0; j < d.q1(); ++j) out += "," + io::quote_csv(d.schema.categorical.variables[j].levels[d.c(i, j)]);
    out += '\n';
  }
  return out;
}

inline void export_dataset(const Dataset& d, const std::filesystem::path& csv_path, const std::filesystem::path& schema_path) {
  DataSchema s = d.schema;
  if (s.response.empty()) s.response = "y";
  io::write_file_atomic(csv_path, dataset_to_csv(d));
  io::write_file_atomic(schema_path, schema_to_json(s).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Term enumeration

/// Non-reference category tuples of a term, lexicographic with the first member slowest.
inline std::vector<std::vector<int>> non_reference_tuples(const CategoricalSchema& schema, const Term& term) {
  schema.validate_term(term);
  std::vector<std::vector<int>> per_var;
  for (int v : term) {
    std::vector<int> ls;
    const auto& var = schema.variables[v];
    for (int k = 0; k < var.level_count(); ++k) {
      if (k != var.reference) ls.push_back(k);
    }
    per_var.push_back(std::move(ls));
  }
  std::vector<std::vector<int>> out;
  for (const auto& ls : per_var) {
    if (ls.empty()) return out;
  }
  std::vector<std::size_t> pos(term.size(), 0);
  while (true) {
    std::vector<int> tuple(term.size());
    for (std::size_t m = 0; m < term.size(); ++m) tuple[m] = per_var[m][pos[m]];
    out.push_back(std::move(tuple));
    std::size_t m = term.size();
    while (m > 0) {
      --m;
      if (++pos[m] < per_var[m].size()) break;
      pos[m] = 0;
      if (m == 0) return out;
    }
  }
}

/// Main effects in variable order followed by interactions in the order given.
/// Duplicate requests are a configuration error.
inline std::vector<Term> canonical_terms(const CategoricalSchema& schema, const std::vector<Term>& requested) {
  std::set<Term> seen;
  std::vector<Term> mains, inters;
  for (const auto& t : requested) {
    schema.validate_term(t);
    if (!seen.insert(t).second) {
      std::string s;
      for (int v : t) s += (s.empty() ? "" : ":") + schema.variables[v].name;
      throw ConfigError("duplicate model term '" + s + "'");
    }
    (t.size() == 1 ? mains : inters).push_back(t);
  }
  std::sort(mains.begin(), mains.end());
  mains.insert(mains.end(), inters.begin(), inters.end());
  return mains;
}

/// Every main effect plus the schema's declared interactions, in canonical order.
inline std::vector<Term> model_terms(const CategoricalSchema& schema) {
  std::vector<Term> req;
  for (int j = 0; j < schema.q1(); ++j) req.push_back({j});
  for (const auto& t : schema.interactions) req.push_back(t);
  return canonical_terms(schema, req);
}

inline std::string term_name(const CategoricalSchema& schema, const Term& term) {
  std::string s;
  for (int v : term) s += (s.empty() ? "" : ":") + schema.variables[v].name;
  return s;
}

// ---------------------------------------------------------------------------
// Simulation-side truth

struct TermCoefficients {
  Term term;
  std::map<std::vector<int>, double> values;  // non-reference tuple -> a_jk
};

struct TrueModel {
  double b0 = 0.0;
  VectorXd b;
  std::vector<TermCoefficients> terms;
  double sigma = 1.0;

  /// Builds a model from a flat coefficient vector laid out as
  /// canonical_terms(terms) x non_reference_tuples, i.e. the expanded-design order.
  static TrueModel from_flat(const CategoricalSchema& schema, const std::vector<Term>& terms, double b0, VectorXd b,
                             const std::vector<double>& coefficients, double sigma) {
    TrueModel m;
    m.b0 = b0;
    m.b = std::move(b);
    m.sigma = sigma;
    std::size_t pos = 0;
    for (const auto& t : canonical_terms(schema, terms)) {
      TermCoefficients tc{t, {}};
      for (auto& tuple : non_reference_tuples(schema, t)) {
        if (pos >= coefficients.size()) throw ConfigError("too few coefficients for the requested terms");
        tc.values.emplace(std::move(tuple), coefficients[pos++]);
      }
      m.terms.push_back(std::move(tc));
    }
    if (pos != coefficients.size()) throw ConfigError("too many coefficients for the requested terms");
    return m;
  }

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto& tc : terms) {
      for (const auto& [k, v] : tc.values) out.push_back(v);
    }
    return out;
  }

  void validate(const CategoricalSchema& schema) const {
    if (!(sigma > 0.0)) throw ValueError("true model requires sigma > 0");
    for (const auto& tc : terms) {
      const auto tuples = non_reference_tuples(schema, tc.term);
      if (tuples.size() != tc.values.size()) throw InvariantError("coefficient map of term '" + term_name(schema, tc.term) + "' has the wrong size");
      for (const auto& t : tuples) {
        if (!tc.values.count(t)) throw InvariantError("coefficient map of term '" + term_name(schema, tc.term) + "' misses a category");
      }
    }
  }
};

/// Regression mean of every row: b0 + x'b plus the coefficient of each term whose
/// members all sit at non-reference categories.
inline VectorXd true_theta(const TrueModel& m, const Dataset& d) {
  if (m.b.size() != d.p()) throw InvariantError("true model has " + std::to_string(m.b.size()) + " slopes but dataset has p=" + std::to_string(d.p()));
  VectorXd theta = VectorXd::Constant(d.size(), m.b0);
  if (d.p() > 0) theta += d.x * m.b;
  const auto& vars = d.schema.categorical.variables;
  std::vector<int> tuple;
  for (Index i = 0; i < d.size(); ++i) {
    for (const auto& tc : m.terms) {
      tuple.clear();
      bool active = true;
      for (int v : tc.term) {
        const int level = d.c(i, v);
        if (level == vars[v].reference) {
          active = false;
          break;
        }
        tuple.push_back(level);
      }
      if (!active) continue;
      auto it = tc.values.find(tuple);
      if (it == tc.values.end()) throw InvariantError("true model has no coefficient for an observed category of '" + term_name(d.schema.categorical, tc.term) + "'");
      theta(i) += it->second;
    }
  }
  return theta;
}

}  // namespace pmmp
