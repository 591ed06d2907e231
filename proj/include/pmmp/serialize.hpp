#pragma once

// JSON form of a fitted model. Group sufficient statistics are stored in full so a
// reloaded model can produce predictions and MSE estimates without the training rows.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmmp/mse.hpp"

namespace pmmp {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

inline nlohmann::json mat_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

inline MatrixXd mat_from(const nlohmann::json& j, Index cols) {
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const VectorXd r = vec_from(j.at(static_cast<std::size_t>(i)));
    if (r.size() != cols) throw SchemaError("model file: matrix row has the wrong width");
    m.row(i) = r.transpose();
  }
  return m;
}

inline nlohmann::json gls_json(const GlsSolution& g) {
  return {{"b0", g.b0}, {"b", vec_json(g.b)}, {"R", g.R}, {"h", g.h_used}};
}

inline GlsSolution gls_from(const nlohmann::json& j) {
  GlsSolution g;
  g.b0 = j.at("b0").get<double>();
  g.b = vec_from(j.at("b"));
  g.R = j.at("R").get<double>();
  g.h_used = j.at("h").get<double>();
  return g;
}

inline nlohmann::json h_json(const HSolution& h) {
  return {{"h", h.h}, {"clamped", h.clamped}, {"bracket", {h.bracket_lo, h.bracket_hi}},
          {"iterations", h.iterations}, {"candidate_roots", h.candidate_roots}};
}

inline HSolution h_from(const nlohmann::json& j) {
  HSolution h;
  h.h = j.at("h").get<double>();
  h.clamped = j.at("clamped").get<bool>();
  h.bracket_lo = j.at("bracket").at(0).get<double>();
  h.bracket_hi = j.at("bracket").at(1).get<double>();
  h.iterations = j.at("iterations").get<int>();
  h.candidate_roots = j.at("candidate_roots").get<int>();
  return h;
}

}  // namespace detail

/// Everything needed to predict from a fit: parameters, diagnostics, data conventions.
struct ModelBundle {
  FittedPmmp fit;
  DataSchema schema;
  std::optional<Standardization> standardization;
  bool log_response = false;
  FitConfig config;
};

inline ModelBundle make_bundle(const FittedPmmp& f, const Dataset& d, const FitConfig& cfg) {
  return {f, d.schema, d.standardization, d.log_response, cfg};
}

inline nlohmann::json model_to_json(const ModelBundle& m) {
  using namespace detail;
  const FittedPmmp& f = m.fit;
  nlohmann::json groups = nlohmann::json::array();
  for (Index k = 0; k < f.stats.group_count(); ++k) {
    groups.push_back({{"key", f.partition.keys[static_cast<std::size_t>(k)]},
                      {"n", f.stats.n(k)},
                      {"ybar", f.stats.ybar(k)},
                      {"xbar", vec_json(f.stats.xbar.row(k).transpose())},
                      {"syy", f.stats.syy(k)},
                      {"sxy", vec_json(f.stats.sxy.row(k).transpose())},
                      {"sxx", mat_json(f.stats.sxx[static_cast<std::size_t>(k)])}});
  }
  nlohmann::json j;
  j["format"] = "pmmp-model";
  j["version"] = kModelFormatVersion;
  j["schema"] = schema_to_json(m.schema);
  j["log_response"] = m.log_response;
  if (m.standardization) {
    j["standardization"] = {{"mean", vec_json(m.standardization->mean)}, {"scale", vec_json(m.standardization->scale)}};
  } else {
    j["standardization"] = nullptr;
  }
  j["config"] = {{"delta", m.config.delta}, {"extra_iterations", m.config.extra_iterations}};
  j["parameters"] = {{"b0", f.b0}, {"b", vec_json(f.b)}, {"R", f.R}, {"h", f.h}, {"G", f.G}, {"h_N", f.h_N}};
  j["diagnostics"] = {{"initial", gls_json(f.initial)},
                      {"initial_h", h_json(f.initial_h)},
                      {"final", gls_json(f.final_gls)},
                      {"final_h", h_json(f.final_h)},
                      {"clamped", f.clamped()},
                      {"warnings", f.warnings}};
  j["N"] = f.stats.N;
  j["groups"] = groups;
  return j;
}

inline ModelBundle model_from_json(const nlohmann::json& j) {
  using namespace detail;
  ModelBundle m;
  try {
    if (j.value("format", std::string()) != "pmmp-model") throw SchemaError("not a pmmp model file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw SchemaError("unsupported model file version");
    m.schema = schema_from_json(j.at("schema"));
    m.log_response = j.at("log_response").get<bool>();
    if (!j.at("standardization").is_null()) {
      Standardization s;
      s.mean = vec_from(j.at("standardization").at("mean"));
      s.scale = vec_from(j.at("standardization").at("scale"));
      m.standardization = s;
    }
    m.config.delta = j.at("config").at("delta").get<double>();
    m.config.extra_iterations = j.at("config").at("extra_iterations").get<int>();

    FittedPmmp& f = m.fit;
    const auto& par = j.at("parameters");
    f.b0 = par.at("b0").get<double>();
    f.b = vec_from(par.at("b"));
    f.R = par.at("R").get<double>();
    f.h = par.at("h").get<double>();
    f.G = par.at("G").get<double>();
    f.h_N = par.at("h_N").get<double>();
    const auto& dg = j.at("diagnostics");
    f.initial = gls_from(dg.at("initial"));
    f.initial_h = h_from(dg.at("initial_h"));
    f.final_gls = gls_from(dg.at("final"));
    f.final_h = h_from(dg.at("final_h"));
    f.warnings = dg.at("warnings").get<std::vector<std::string>>();

    const Index p = f.b.size();
    if (p != static_cast<Index>(m.schema.continuous.size())) throw SchemaError("model file: slope count does not match the schema");
    const auto& groups = j.at("groups");
    const auto K = static_cast<Index>(groups.size());
    if (K < 1) throw SchemaError("model file has no groups");
    GroupStats& s = f.stats;
    s.N = j.at("N").get<Index>();
    s.n.resize(K);
    s.ybar.resize(K);
    s.xbar.resize(K, p);
    s.syy.resize(K);
    s.sxy.resize(K, p);
    s.sxx.clear();
    f.partition.level_counts = m.schema.categorical.level_counts();
    f.partition.members.assign(static_cast<std::size_t>(K), {});
    for (Index k = 0; k < K; ++k) {
      const auto& g = groups.at(static_cast<std::size_t>(k));
      GroupKey key = g.at("key").get<GroupKey>();
      f.partition.check_key(key);
      if (k > 0 && !(f.partition.keys.back() < key)) throw SchemaError("model file: group keys are not strictly increasing");
      f.partition.keys.push_back(std::move(key));
      s.n(k) = g.at("n").get<double>();
      s.ybar(k) = g.at("ybar").get<double>();
      s.syy(k) = g.at("syy").get<double>();
      const VectorXd xb = vec_from(g.at("xbar")), sxy = vec_from(g.at("sxy"));
      if (xb.size() != p || sxy.size() != p) throw SchemaError("model file: group statistics have the wrong width");
      s.xbar.row(k) = xb.transpose();
      s.sxy.row(k) = sxy.transpose();
      MatrixXd sxx = mat_from(g.at("sxx"), p);
      if (sxx.rows() != p) throw SchemaError("model file: group scatter has the wrong shape");
      s.sxx.push_back(std::move(sxx));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

inline void write_model(const std::filesystem::path& path, const ModelBundle& m) {
  io::write_file_atomic(path, model_to_json(m).dump(2) + "\n");
}

inline ModelBundle read_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace pmmp
