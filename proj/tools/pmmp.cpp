// pmmp command-line front end: fit, predict, simulate, baseline, expand, verify, replay.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "pmmp/pmmp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kInput = 2, kNumerical = 3, kInternal = 4 };

std::string sha256_file(const fs::path& path) {
  const std::string data = pmmp::io::read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw pmmp::InvariantError("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// Collects what a run read and wrote, then writes manifest.json next to the outputs.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> arguments)
      : subcommand_(std::move(subcommand)), arguments_(std::move(arguments)), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }
  void config(json c) { config_ = std::move(c); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const fs::path& dir) const {
    json j;
    j["tool"] = "pmmp";
    j["version"] = pmmp::kVersion;
    j["subcommand"] = subcommand_;
    j["arguments"] = arguments_;
    j["config"] = config_;
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    j["inputs"] = json::array();
    for (const auto& p : inputs_) j["inputs"].push_back({{"path", fs::absolute(p).string()}, {"sha256", sha256_file(p)}});
    j["outputs"] = json::array();
    for (const auto& p : outputs_) j["outputs"].push_back({{"path", fs::absolute(p).string()}, {"sha256", sha256_file(p)}});
    j["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    pmmp::io::write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::vector<std::string> arguments_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> inputs_, outputs_;
  json config_ = json::object();
  std::optional<std::uint64_t> seed_;
};

void emit(Manifest& m, const fs::path& path, const std::string& content) {
  pmmp::io::write_file_atomic(path, content);
  m.output(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw pmmp::ValueError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string fmt(double v) { return pmmp::io::format_double(v); }

std::string key_labels(const pmmp::CategoricalSchema& schema, const pmmp::GroupKey& key) {
  std::string s;
  for (std::size_t j = 0; j < key.size(); ++j) {
    if (j) s += ",";
    s += pmmp::io::quote_csv(schema.variables[j].levels[static_cast<std::size_t>(key[j])]);
  }
  return s;
}

// Parses "c1:c2,c1:c3" into interaction terms of the schema.
std::vector<pmmp::Term> parse_terms(const pmmp::CategoricalSchema& schema, const std::string& spec) {
  std::vector<pmmp::Term> out;
  std::stringstream outer(spec);
  std::string item;
  while (std::getline(outer, item, ',')) {
    item = pmmp::io::trim(item);
    if (item.empty()) continue;
    pmmp::Term t;
    std::stringstream inner(item);
    std::string name;
    while (std::getline(inner, name, ':')) {
      const auto idx = schema.variable_index(pmmp::io::trim(name));
      if (!idx) throw pmmp::ConfigError("unknown categorical variable '" + name + "' in term '" + item + "'");
      t.push_back(*idx);
    }
    std::sort(t.begin(), t.end());
    out.push_back(t);
  }
  return out;
}

struct IngestFlags {
  bool standardize = false;
  bool log_response = false;
  bool drop_incomplete = false;

  void add(CLI::App* cmd) {
    cmd->add_flag("--standardize", standardize, "Standardize continuous columns with the sample mean and sd");
    cmd->add_flag("--log-response", log_response, "Natural log of the response (must be positive)");
    cmd->add_flag("--drop-incomplete", drop_incomplete, "Drop rows with missing values instead of failing");
  }
  pmmp::IngestOptions options() const {
    pmmp::IngestOptions o;
    o.standardize_continuous = standardize;
    o.log_response = log_response;
    o.drop_incomplete = drop_incomplete;
    return o;
  }
  json to_json() const {
    return {{"standardize", standardize}, {"log_response", log_response}, {"drop_incomplete", drop_incomplete}};
  }
};

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data, schema, out_dir;
  double delta = 0.1;
  int extra_iterations = 0;
  std::uint64_t seed = 12345;
  bool export_data = false;
  IngestFlags ingest;
};

int cmd_fit(const FitArgs& a, Manifest& m) {
  const auto schema = pmmp::read_schema(a.schema);
  const auto data = pmmp::ingest_csv(a.data, schema, a.ingest.options());
  m.input(a.data);
  m.input(a.schema);
  pmmp::FitConfig cfg;
  cfg.delta = a.delta;
  cfg.extra_iterations = a.extra_iterations;
  const auto f = pmmp::fit(data, cfg);

  const fs::path out(a.out_dir);
  ensure_dir(out);
  emit(m, out / "model.json", pmmp::model_to_json(pmmp::make_bundle(f, data, cfg)).dump(2) + "\n");
  emit(m, out / "groups.csv", pmmp::group_report_csv(f.partition, f.stats, schema.categorical));
  if (a.export_data) {
    pmmp::export_dataset(data, out / "data.csv", out / "schema.json");
    m.output(out / "data.csv");
    m.output(out / "schema.json");
  }
  m.seed(a.seed);
  m.config({{"delta", a.delta}, {"extra_iterations", a.extra_iterations}, {"ingest", a.ingest.to_json()}, {"export_data", a.export_data}});
  for (const auto& w : f.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "N=" << data.size() << " K=" << f.partition.group_count() << " h=" << fmt(f.h) << " R=" << fmt(f.R) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, data, out_dir;
  bool mse = false;
  bool drop_incomplete = false;
};

int cmd_predict(const PredictArgs& a, Manifest& m) {
  const auto bundle = pmmp::read_model(a.model);
  pmmp::IngestOptions opt;
  opt.response_optional = true;
  opt.drop_incomplete = a.drop_incomplete;
  opt.fixed_standardization = bundle.standardization;
  // The response is never used for prediction; skip the log transform so
  // new data without (or with non-positive) responses is accepted.
  const auto data = pmmp::ingest_table(pmmp::io::read_csv(a.data), bundle.schema, opt);
  m.input(a.model);
  m.input(a.data);

  const auto& f = bundle.fit;
  std::optional<pmmp::WDecomposition> w;
  pmmp::VectorXd alpha;
  if (a.mse) {
    w = pmmp::build_w(f.stats, f.h);
    alpha = pmmp::alpha_hats(f);
  }

  std::string out = "row";
  for (const auto& v : bundle.schema.categorical.variables) out += "," + pmmp::io::quote_csv(v.name);
  out += ",theta,alpha,gamma,unseen";
  if (a.mse) out += ",mse,bias,variance,margin";
  out += "\n";
  for (pmmp::Index i = 0; i < data.size(); ++i) {
    pmmp::GroupKey key(static_cast<std::size_t>(data.q1()));
    for (int j = 0; j < data.q1(); ++j) key[static_cast<std::size_t>(j)] = data.c(i, j);
    const pmmp::VectorXd x = data.x.row(i).transpose();
    const auto r = pmmp::predict_theta(f, x, key);
    out += std::to_string(i + 1) + "," + key_labels(bundle.schema.categorical, key) + "," + fmt(r.theta) + "," + fmt(r.alpha) + "," +
           fmt(r.shrinkage) + "," + (r.unseen() ? "1" : "0");
    if (a.mse) {
      if (r.unseen()) {
        out += ",NA,NA,NA,NA";
      } else {
        const auto e = pmmp::mse_at(f, *w, x, *r.group, alpha);
        out += "," + fmt(e.value) + "," + fmt(e.bias) + "," + fmt(e.variance) + "," + fmt(e.margin);
      }
    }
    out += "\n";
  }
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  emit(m, dir / "predictions.csv", out);
  m.config({{"mse", a.mse}, {"drop_incomplete", a.drop_incomplete}});
  if (a.mse && f.clamped()) std::cerr << "warning: h was clamped to h_N; margins are low-signal\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_sim;
  std::optional<unsigned> threads;
};

json k_stats(const std::vector<pmmp::Index>& ks) {
  std::map<pmmp::Index, int> counts;
  for (auto k : ks) {
    if (k > 0) ++counts[k];
  }
  pmmp::Index mode = 0;
  int best = -1;
  for (const auto& [k, c] : counts) {
    if (c > best) {
      best = c;
      mode = k;
    }
  }
  std::vector<double> v;
  for (auto k : ks) {
    if (k > 0) v.push_back(static_cast<double>(k));
  }
  json hist = json::object();
  for (const auto& [k, c] : counts) hist[std::to_string(k)] = c;
  return {{"mode", mode}, {"median", pmmp::sim::quantile(v, 0.5)},
          {"min", v.empty() ? 0.0 : *std::min_element(v.begin(), v.end())},
          {"max", v.empty() ? 0.0 : *std::max_element(v.begin(), v.end())},
          {"histogram", hist}};
}

std::string cell(double v) { return std::isfinite(v) ? fmt(v) : std::string("NA"); }

int cmd_simulate(const SimulateArgs& a, Manifest& m) {
  json raw;
  try {
    raw = json::parse(pmmp::io::read_file(a.config));
  } catch (const json::parse_error& e) {
    throw pmmp::ConfigError(a.config + ": " + e.what());
  }
  auto cfg = pmmp::sim::config_from_json(raw);
  if (a.seed) cfg.seed = *a.seed;
  if (a.n_sim) cfg.n_sim = *a.n_sim;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();
  m.input(a.config);

  const auto summary = pmmp::sim::run(cfg);

  json s;
  s["config"] = pmmp::sim::config_to_json(cfg);
  s["failures"] = summary.failures;
  s["failure_messages"] = summary.failure_messages;
  s["methods"] = json::object();
  for (const auto& meth : summary.methods) s["methods"][meth.name] = meth.box.to_json();
  s["K"] = k_stats(summary.group_counts);

  std::string ases = "replicate,K";
  for (const auto& meth : summary.methods) ases += "," + meth.name;
  ases += "\n";
  for (std::size_t r = 0; r < summary.group_counts.size(); ++r) {
    ases += std::to_string(r) + "," + std::to_string(summary.group_counts[r]);
    for (const auto& meth : summary.methods) ases += "," + cell(meth.ase[r]);
    ases += "\n";
  }
  std::string diag = "replicate,b0_hat,b1_hat,R_hat,h_hat,h_N,alpha_bar,G_K,clamped\n";
  for (std::size_t r = 0; r < summary.diagnostics.size(); ++r) {
    const auto& d = summary.diagnostics[r];
    diag += std::to_string(r) + "," + fmt(d.b0_hat) + "," + fmt(d.b1_hat) + "," + fmt(d.R_hat) + "," + fmt(d.h_hat) + "," + fmt(d.h_N) + "," +
            fmt(d.alpha_bar) + "," + fmt(d.G_K) + "," + (d.clamped ? "1" : "0") + "\n";
  }

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  if (cfg.study == pmmp::sim::StudyKind::RelativeBias) {
    s["rb"] = summary.rb_box.to_json();
    std::string rb = "row,mse,mse_hat_mean,rb\n";
    for (pmmp::Index i = 0; i < summary.rb.size(); ++i) {
      rb += std::to_string(i + 1) + "," + fmt(summary.mse_true(i)) + "," + fmt(summary.mse_hat_mean(i)) + "," + cell(summary.rb(i)) + "\n";
    }
    emit(m, dir / "rb.csv", rb);
  }
  json box = json::object();
  for (const auto& meth : summary.methods) box[meth.name] = meth.box.to_json();
  if (cfg.study == pmmp::sim::StudyKind::RelativeBias) box["rb"] = summary.rb_box.to_json();

  emit(m, dir / "summary.json", s.dump(2) + "\n");
  emit(m, dir / "ases.csv", ases);
  emit(m, dir / "diagnostics.csv", diag);
  emit(m, dir / "boxplot.json", box.dump(2) + "\n");
  m.seed(cfg.seed);
  m.config(pmmp::sim::config_to_json(cfg));

  for (const auto& meth : summary.methods) std::cout << meth.name << " median ASE " << fmt(meth.box.median) << "\n";
  if (cfg.study == pmmp::sim::StudyKind::RelativeBias) std::cout << "median RB " << fmt(summary.rb_box.median) << "\n";
  if (summary.failures > 0) std::cerr << summary.failures << " replicate(s) failed; see summary.json\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct BaselineArgs {
  std::string data, schema, out_dir, terms;
  std::uint64_t seed = 12345;
  int folds = 10;
  std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  IngestFlags ingest;
};

pmmp::ExpandedDesign expand_for(const pmmp::Dataset& data, const std::string& terms) {
  auto requested = terms.empty() ? data.schema.categorical.interactions : parse_terms(data.schema.categorical, terms);
  for (int j = 0; j < data.q1(); ++j) requested.insert(requested.begin() + j, pmmp::Term{j});
  return pmmp::expand(data, requested);
}

int cmd_baseline(const BaselineArgs& a, Manifest& m) {
  const auto schema = pmmp::read_schema(a.schema);
  const auto data = pmmp::ingest_csv(a.data, schema, a.ingest.options());
  m.input(a.data);
  m.input(a.schema);
  const auto design = expand_for(data, a.terms);

  pmmp::CvOptions cv;
  cv.folds = a.folds;
  cv.alphas = a.alphas;
  cv.seed = a.seed;
  const auto res = pmmp::cv_select(design.matrix, data.y, cv);

  json j;
  j["alpha"] = res.alpha_mix;
  j["lambda"] = res.lambda;
  j["cv_error"] = res.cv_error;
  j["intercept"] = res.fit.intercept;
  j["nonzero_count"] = res.fit.nonzero_count();
  j["predictor_count"] = design.predictor_count();
  j["folds"] = a.folds;
  j["alpha_grid"] = a.alphas;
  j["seed"] = a.seed;
  j["converged"] = res.fit.converged;
  std::string coef = "label,coefficient\n";
  for (std::size_t c = 0; c < design.labels.size(); ++c) {
    coef += pmmp::io::quote_csv(design.labels[c]) + "," + fmt(res.fit.coefficients(static_cast<pmmp::Index>(c))) + "\n";
  }
  std::string fitted = "row,theta\n";
  const auto pred = pmmp::predict_enet(res.fit, design.matrix);
  for (pmmp::Index i = 0; i < pred.size(); ++i) fitted += std::to_string(i + 1) + "," + fmt(pred(i)) + "\n";

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  emit(m, dir / "enet_fit.json", j.dump(2) + "\n");
  emit(m, dir / "coefficients.csv", coef);
  emit(m, dir / "fitted.csv", fitted);
  m.seed(a.seed);
  m.config({{"folds", a.folds}, {"alpha_grid", a.alphas}, {"terms", a.terms}, {"ingest", a.ingest.to_json()}});
  std::cout << "alpha=" << fmt(res.alpha_mix) << " lambda=" << fmt(res.lambda) << " nonzero=" << res.fit.nonzero_count() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExpandArgs {
  std::string data, schema, out_dir, terms;
  IngestFlags ingest;
};

int cmd_expand(const ExpandArgs& a, Manifest& m) {
  const auto schema = pmmp::read_schema(a.schema);
  const auto data = pmmp::ingest_csv(a.data, schema, a.ingest.options());
  m.input(a.data);
  m.input(a.schema);
  const auto design = expand_for(data, a.terms);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  emit(m, dir / "design.csv", pmmp::design_to_csv(design));
  m.config({{"terms", a.terms}, {"ingest", a.ingest.to_json()}});
  std::cout << "P=" << design.predictor_count() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_verify(const std::string& manifest_path) {
  json j;
  try {
    j = json::parse(pmmp::io::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw pmmp::SchemaError(manifest_path + ": " + e.what());
  }
  int bad = 0;
  for (const char* section : {"inputs", "outputs"}) {
    for (const auto& entry : j.at(section)) {
      const fs::path p = entry.at("path").get<std::string>();
      const auto expected = entry.at("sha256").get<std::string>();
      if (!fs::exists(p)) {
        std::cout << "MISSING  " << p.string() << "\n";
        ++bad;
      } else if (sha256_file(p) != expected) {
        std::cout << "CHANGED  " << p.string() << "\n";
        ++bad;
      } else {
        std::cout << "OK       " << p.string() << "\n";
      }
    }
  }
  return bad == 0 ? kOk : kInput;
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  json j;
  try {
    j = json::parse(pmmp::io::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw pmmp::SchemaError(manifest_path + ": " + e.what());
  }
  auto args = j.at("arguments").get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay") throw pmmp::ConfigError("refusing to replay a replay");
  if (!out_dir.empty()) {
    auto it = std::find(args.begin(), args.end(), "--out-dir");
    if (it == args.end() || std::next(it) == args.end()) throw pmmp::ConfigError("recorded run has no --out-dir to replace");
    *std::next(it) = out_dir;
  }
  return run(args);
}

// ---------------------------------------------------------------------------

int run(std::vector<std::string> args) {
  CLI::App app{"Pseudo mixed model prediction for regression means with many categorical predictors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pmmp::kVersion);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit the working mixed model and write model.json and groups.csv");
  fit->add_option("--data", fit_args.data, "Input CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--schema", fit_args.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  fit->add_option("--out-dir", fit_args.out_dir, "Output directory")->required();
  fit->add_option("--delta", fit_args.delta, "Constant in h_N = delta / sqrt(n_*)")->capture_default_str();
  fit->add_option("--extra-iterations", fit_args.extra_iterations, "Extra GLS / variance-ratio alternations after the two-pass procedure")->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "Recorded in the manifest; fitting is deterministic")->capture_default_str();
  fit->add_flag("--export-data", fit_args.export_data, "Also write the ingested data as data.csv + schema.json");
  fit_args.ingest.add(fit);

  PredictArgs pred_args;
  auto* predict = app.add_subcommand("predict", "Predict regression means for new rows from model.json");
  predict->add_option("--model", pred_args.model, "model.json from fit")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", pred_args.data, "CSV with the schema's predictor columns")->required()->check(CLI::ExistingFile);
  predict->add_option("--out-dir", pred_args.out_dir, "Output directory")->required();
  predict->add_flag("--mse", pred_args.mse, "Add MSE estimates and margins of error (2 sqrt(MSE))");
  predict->add_flag("--drop-incomplete", pred_args.drop_incomplete, "Drop rows with missing predictors");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario from a JSON config");
  simulate->add_option("--config", sim_args.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out-dir", sim_args.out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim_args.seed, "Root seed (overrides the config; default 12345)");
  simulate->add_option("--n-sim", sim_args.n_sim, "Number of replicates (overrides the config)");
  simulate->add_option("--threads", sim_args.threads, "Worker threads (0 = all cores)");

  BaselineArgs base_args;
  auto* baseline = app.add_subcommand("baseline", "Cross-validated elastic net on the expanded design");
  baseline->add_option("--data", base_args.data, "Input CSV")->required()->check(CLI::ExistingFile);
  baseline->add_option("--schema", base_args.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  baseline->add_option("--out-dir", base_args.out_dir, "Output directory")->required();
  baseline->add_option("--terms", base_args.terms, "Interaction terms, e.g. \"c1:c2,c1:c2:c3\" (default: the schema's)");
  baseline->add_option("--seed", base_args.seed, "Fold assignment seed")->capture_default_str();
  baseline->add_option("--folds", base_args.folds, "Cross-validation folds")->capture_default_str();
  baseline->add_option("--alpha", base_args.alphas, "Mixing values to search (1 = lasso)");
  base_args.ingest.add(baseline);

  ExpandArgs exp_args;
  auto* expand = app.add_subcommand("expand", "Write the indicator design matrix as CSV");
  expand->add_option("--data", exp_args.data, "Input CSV")->required()->check(CLI::ExistingFile);
  expand->add_option("--schema", exp_args.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  expand->add_option("--out-dir", exp_args.out_dir, "Output directory")->required();
  expand->add_option("--terms", exp_args.terms, "Interaction terms (default: the schema's)");
  exp_args.ingest.add(expand);

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "Check the hashes recorded in a run manifest");
  verify->add_option("manifest", verify_path, "manifest.json")->required()->check(CLI::ExistingFile);

  std::string replay_path, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path, "manifest.json")->required()->check(CLI::ExistingFile);
  replay->add_option("--out-dir", replay_out, "Write to this directory instead of the recorded one");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  Manifest manifest(args.empty() ? std::string() : args.front(), args);
  int code = kOk;
  fs::path out_dir;
  if (fit->parsed()) {
    code = cmd_fit(fit_args, manifest);
    out_dir = fit_args.out_dir;
  } else if (predict->parsed()) {
    code = cmd_predict(pred_args, manifest);
    out_dir = pred_args.out_dir;
  } else if (simulate->parsed()) {
    code = cmd_simulate(sim_args, manifest);
    out_dir = sim_args.out_dir;
  } else if (baseline->parsed()) {
    code = cmd_baseline(base_args, manifest);
    out_dir = base_args.out_dir;
  } else if (expand->parsed()) {
    code = cmd_expand(exp_args, manifest);
    out_dir = exp_args.out_dir;
  } else if (verify->parsed()) {
    return cmd_verify(verify_path);
  } else if (replay->parsed()) {
    return cmd_replay(replay_path, replay_out);
  }
  if (code == kOk && !out_dir.empty()) manifest.write(out_dir);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const pmmp::RankDeficiencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const pmmp::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const pmmp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
