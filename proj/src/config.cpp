#include "survens/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "survens/errors.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError("'" + prefix + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known)
      throw ConfigError("unknown key '" +
                        (prefix.empty() ? item.key() : prefix + "." + item.key()) +
                        "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

CohortSchema parse_schema(const json& j) {
  check_keys(j, "data.schema",
             {"id", "visit_time", "event_time", "event", "covariates",
              "static", "categorical"});
  CohortSchema s;
  s.id_column = get_or<std::string>(j, "id", s.id_column);
  s.visit_time_column = get_or<std::string>(j, "visit_time", s.visit_time_column);
  s.event_time_column = get_or<std::string>(j, "event_time", s.event_time_column);
  s.event_column = get_or<std::string>(j, "event", s.event_column);
  s.covariates = get_or<std::vector<std::string>>(j, "covariates", {});
  s.static_covariates = get_or<std::vector<std::string>>(j, "static", {});
  s.categorical = get_or<std::vector<std::string>>(j, "categorical", {});
  if (s.covariates.empty() && s.static_covariates.empty())
    throw ConfigError("data.schema must list covariates");
  return s;
}

SynthConfig parse_synth(const json& j) {
  check_keys(j, "synth",
             {"n_subjects", "n_numeric", "n_categorical", "n_categories",
              "true_beta", "slope_beta", "scale", "shape", "censor_rate",
              "missing_rate", "visit_times", "visit_jitter_sd",
              "visit_noise_sd", "seed"});
  SynthConfig s;
  s.n_subjects = get_or(j, "n_subjects", s.n_subjects);
  s.n_numeric = get_or(j, "n_numeric", s.n_numeric);
  s.n_categorical = get_or(j, "n_categorical", s.n_categorical);
  s.n_categories = get_or(j, "n_categories", s.n_categories);
  s.true_beta = get_or(j, "true_beta", s.true_beta);
  s.slope_beta = get_or(j, "slope_beta", s.slope_beta);
  s.baseline_hazard_scale = get_or(j, "scale", s.baseline_hazard_scale);
  s.baseline_hazard_shape = get_or(j, "shape", s.baseline_hazard_shape);
  s.censor_rate = get_or(j, "censor_rate", s.censor_rate);
  s.missing_rate = get_or(j, "missing_rate", s.missing_rate);
  s.visit_times = get_or(j, "visit_times", s.visit_times);
  s.visit_jitter_sd = get_or(j, "visit_jitter_sd", s.visit_jitter_sd);
  s.visit_noise_sd = get_or(j, "visit_noise_sd", s.visit_noise_sd);
  s.seed = get_or(j, "seed", s.seed);
  return s;
}

void parse_run(const json& j, AppConfig& cfg) {
  check_keys(j, "run",
             {"scenarios", "penalties", "elastic_net_alpha", "test_fraction",
              "cv_folds", "mice_m", "mice_iter", "selection_cv_folds",
              "selection_n_lambda", "fallback_top_k", "seed", "jobs", "rsf",
              "deepsurv", "xgboost", "subgroup"});
  RunConfig& r = cfg.run;
  if (j.contains("scenarios")) {
    cfg.scenarios.clear();
    for (const auto& name : j.at("scenarios"))
      cfg.scenarios.push_back(scenario_from_name(name.get<std::string>()));
    if (cfg.scenarios.empty()) throw ConfigError("run.scenarios is empty");
  }
  if (j.contains("penalties")) {
    cfg.penalties = j.at("penalties").get<std::vector<std::string>>();
    if (cfg.penalties.empty()) throw ConfigError("run.penalties is empty");
    for (const auto& p : cfg.penalties)
      if (p != "lasso" && p != "elastic_net")
        throw ConfigError("unknown penalty '" + p + "'");
  }
  r.elastic_net_alpha = get_or(j, "elastic_net_alpha", r.elastic_net_alpha);
  r.test_fraction = get_or(j, "test_fraction", r.test_fraction);
  r.cv_folds = get_or(j, "cv_folds", r.cv_folds);
  r.mice_m = get_or(j, "mice_m", r.mice_m);
  r.mice_iter = get_or(j, "mice_iter", r.mice_iter);
  r.selection_cv_folds = get_or(j, "selection_cv_folds", r.selection_cv_folds);
  r.selection_n_lambda = get_or(j, "selection_n_lambda", r.selection_n_lambda);
  r.fallback_top_k = get_or(j, "fallback_top_k", r.fallback_top_k);
  r.seed = get_or(j, "seed", r.seed);
  r.jobs = get_or(j, "jobs", r.jobs);
  if (j.contains("rsf")) {
    const json& f = j.at("rsf");
    check_keys(f, "run.rsf", {"n_trees", "mtry", "min_node_events", "max_candidates"});
    r.rsf.n_trees = get_or(f, "n_trees", r.rsf.n_trees);
    r.rsf.mtry = get_or(f, "mtry", r.rsf.mtry);
    r.rsf.min_node_events = get_or(f, "min_node_events", r.rsf.min_node_events);
    r.rsf.max_candidates = get_or(f, "max_candidates", r.rsf.max_candidates);
  }
  if (j.contains("deepsurv")) {
    const json& f = j.at("deepsurv");
    check_keys(f, "run.deepsurv",
               {"hidden", "activation", "dropout", "optimizer", "learning_rate",
                "momentum", "weight_decay", "clip_norm", "epochs"});
    r.deepsurv.hidden = get_or(f, "hidden", r.deepsurv.hidden);
    r.deepsurv.activation = get_or(f, "activation", r.deepsurv.activation);
    r.deepsurv.dropout = get_or(f, "dropout", r.deepsurv.dropout);
    r.deepsurv.optimizer = get_or(f, "optimizer", r.deepsurv.optimizer);
    r.deepsurv.learning_rate = get_or(f, "learning_rate", r.deepsurv.learning_rate);
    r.deepsurv.momentum = get_or(f, "momentum", r.deepsurv.momentum);
    r.deepsurv.weight_decay = get_or(f, "weight_decay", r.deepsurv.weight_decay);
    r.deepsurv.clip_norm = get_or(f, "clip_norm", r.deepsurv.clip_norm);
    r.deepsurv.epochs = get_or(f, "epochs", r.deepsurv.epochs);
  }
  if (j.contains("xgboost")) {
    const json& f = j.at("xgboost");
    check_keys(f, "run.xgboost",
               {"n_rounds", "learning_rate", "max_depth", "gamma", "lambda"});
    r.gbcox.n_rounds = get_or(f, "n_rounds", r.gbcox.n_rounds);
    r.gbcox.learning_rate = get_or(f, "learning_rate", r.gbcox.learning_rate);
    r.gbcox.max_depth = get_or(f, "max_depth", r.gbcox.max_depth);
    r.gbcox.gamma = get_or(f, "gamma", r.gbcox.gamma);
    r.gbcox.lambda = get_or(f, "lambda", r.gbcox.lambda);
  }
  if (j.contains("subgroup")) {
    const json& f = j.at("subgroup");
    check_keys(f, "run.subgroup", {"column", "edges"});
    r.subgroup.column = get_or<std::string>(f, "column", "");
    r.subgroup.edges = get_or<std::vector<double>>(f, "edges", {});
    if (r.subgroup.column.empty())
      throw ConfigError("run.subgroup.column is required");
  }
}

AppConfig parse_config(const json& j) {
  check_keys(j, "", {"data", "synth", "run", "output_dir"});
  AppConfig cfg;
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"cohort", "schema"});
    cfg.has_data = true;
    cfg.cohort_path = get_or<std::string>(d, "cohort", "");
    if (cfg.cohort_path.empty()) throw ConfigError("data.cohort is required");
    if (!d.contains("schema")) throw ConfigError("data.schema is required");
    cfg.schema = parse_schema(d.at("schema"));
  }
  if (j.contains("synth")) {
    cfg.has_synth = true;
    cfg.synth = parse_synth(j.at("synth"));
  }
  if (cfg.has_data && cfg.has_synth)
    throw ConfigError("provide either data or synth, not both");
  if (j.contains("run")) parse_run(j.at("run"), cfg);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  return cfg;
}

json override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

void apply_override(json& j, const std::string& expr) {
  auto eq = expr.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.key=value: " + expr);
  std::string path = expr.substr(0, eq);
  json* node = &j;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    std::string part = path.substr(start, dot - start);
    if (part.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[part] = override_value(expr.substr(eq + 1));
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

json app_config_to_json(const AppConfig& cfg) {
  json j;
  if (cfg.has_data) {
    j["data"]["cohort"] = cfg.cohort_path;
    json& s = j["data"]["schema"];
    s["id"] = cfg.schema.id_column;
    s["visit_time"] = cfg.schema.visit_time_column;
    s["event_time"] = cfg.schema.event_time_column;
    s["event"] = cfg.schema.event_column;
    s["covariates"] = cfg.schema.covariates;
    s["static"] = cfg.schema.static_covariates;
    s["categorical"] = cfg.schema.categorical;
  }
  if (cfg.has_synth) {
    json& s = j["synth"];
    s["n_subjects"] = cfg.synth.n_subjects;
    s["n_numeric"] = cfg.synth.n_numeric;
    s["n_categorical"] = cfg.synth.n_categorical;
    s["n_categories"] = cfg.synth.n_categories;
    s["true_beta"] = cfg.synth.true_beta;
    s["slope_beta"] = cfg.synth.slope_beta;
    s["scale"] = cfg.synth.baseline_hazard_scale;
    s["shape"] = cfg.synth.baseline_hazard_shape;
    s["censor_rate"] = cfg.synth.censor_rate;
    s["missing_rate"] = cfg.synth.missing_rate;
    s["visit_times"] = cfg.synth.visit_times;
    s["visit_jitter_sd"] = cfg.synth.visit_jitter_sd;
    s["visit_noise_sd"] = cfg.synth.visit_noise_sd;
    s["seed"] = cfg.synth.seed;
  }
  json& r = j["run"];
  {
    std::vector<std::string> names;
    for (Scenario s : cfg.scenarios) names.push_back(scenario_name(s));
    r["scenarios"] = names;
  }
  r["penalties"] = cfg.penalties;
  r["elastic_net_alpha"] = cfg.run.elastic_net_alpha;
  r["test_fraction"] = cfg.run.test_fraction;
  r["cv_folds"] = cfg.run.cv_folds;
  r["mice_m"] = cfg.run.mice_m;
  r["mice_iter"] = cfg.run.mice_iter;
  r["selection_cv_folds"] = cfg.run.selection_cv_folds;
  r["selection_n_lambda"] = cfg.run.selection_n_lambda;
  r["fallback_top_k"] = cfg.run.fallback_top_k;
  r["seed"] = cfg.run.seed;
  r["jobs"] = cfg.run.jobs;
  r["rsf"] = {{"n_trees", cfg.run.rsf.n_trees},
              {"mtry", cfg.run.rsf.mtry},
              {"min_node_events", cfg.run.rsf.min_node_events},
              {"max_candidates", cfg.run.rsf.max_candidates}};
  r["deepsurv"] = {{"hidden", cfg.run.deepsurv.hidden},
                   {"activation", cfg.run.deepsurv.activation},
                   {"dropout", cfg.run.deepsurv.dropout},
                   {"optimizer", cfg.run.deepsurv.optimizer},
                   {"learning_rate", cfg.run.deepsurv.learning_rate},
                   {"momentum", cfg.run.deepsurv.momentum},
                   {"weight_decay", cfg.run.deepsurv.weight_decay},
                   {"clip_norm", cfg.run.deepsurv.clip_norm},
                   {"epochs", cfg.run.deepsurv.epochs}};
  r["xgboost"] = {{"n_rounds", cfg.run.gbcox.n_rounds},
                  {"learning_rate", cfg.run.gbcox.learning_rate},
                  {"max_depth", cfg.run.gbcox.max_depth},
                  {"gamma", cfg.run.gbcox.gamma},
                  {"lambda", cfg.run.gbcox.lambda}};
  if (!cfg.run.subgroup.column.empty())
    r["subgroup"] = {{"column", cfg.run.subgroup.column},
                     {"edges", cfg.run.subgroup.edges}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

json pooled_to_json(const PooledEstimate& p) {
  json j;
  j["mean"] = p.mean;
  j["within_var"] = p.within_var;
  j["between_var"] = p.between_var;
  j["total_var"] = p.total_var;
  j["df"] = std::isinf(p.df) ? json() : json(p.df);
  j["ci_lo"] = p.ci_lo;
  j["ci_hi"] = p.ci_hi;
  j["degenerate"] = p.degenerate;
  return j;
}

PooledEstimate pooled_from_json(const json& j) {
  PooledEstimate p;
  p.mean = j.at("mean").get<double>();
  p.within_var = j.at("within_var").get<double>();
  p.between_var = j.at("between_var").get<double>();
  p.total_var = j.at("total_var").get<double>();
  p.df = j.at("df").is_null() ? std::numeric_limits<double>::infinity()
                              : j.at("df").get<double>();
  p.ci_lo = j.at("ci_lo").get<double>();
  p.ci_hi = j.at("ci_hi").get<double>();
  p.degenerate = j.at("degenerate").get<bool>();
  return p;
}

size_t hash_overlap(const std::vector<uint64_t>& a,
                    const std::vector<uint64_t>& b) {
  std::vector<uint64_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  return both.size();
}

std::string fmt(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

AppConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

AppConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

std::string config_fingerprint(const AppConfig& cfg) {
  std::string dump = app_config_to_json(cfg).dump();
  uint64_t h = fnv1a64(dump);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

void write_report_json(const RunReport& report, const std::string& path) {
  json j;
  j["version"] = kVersion;
  j["config_hash"] = report.config_hash;
  json cells = json::array();
  for (const CellReport& cell : report.cells) {
    json c;
    c["scenario"] = cell.scenario;
    c["penalty"] = cell.penalty;
    c["model_names"] = cell.model_names;
    json metrics = json::array();
    for (const MetricSummary& ms : cell.metrics)
      metrics.push_back({{"cindex", pooled_to_json(ms.cindex)},
                         {"iauc", pooled_to_json(ms.iauc)}});
    c["metrics"] = std::move(metrics);
    c["selected_features"] = cell.selected_features;
    c["selection_counts"] = cell.selection_counts;
    c["selection_fallback"] = cell.selection_fallback;
    c["bma_weights"] = std::vector<double>(
        cell.bma_weights.data(), cell.bma_weights.data() + cell.bma_weights.size());
    c["mean_oob_fraction"] = cell.mean_oob_fraction;
    c["zero_interval_count"] = cell.zero_interval_count;
    c["n_train"] = cell.n_train;
    c["n_test"] = cell.n_test;
    json subs = json::array();
    for (const SubgroupResult& s : cell.subgroups) {
      json js;
      js["label"] = s.label;
      js["n"] = s.n;
      js["n_events"] = s.n_events;
      js["skipped"] = s.skipped;
      if (!s.skipped) js["cindex"] = pooled_to_json(s.cindex);
      subs.push_back(std::move(js));
    }
    c["subgroups"] = std::move(subs);
    c["audit"] = {{"train_rows", cell.audit.train_hashes.size()},
                  {"test_rows", cell.audit.test_hashes.size()},
                  {"overlap", hash_overlap(cell.audit.train_hashes,
                                           cell.audit.test_hashes)}};
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

RunReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("report is not valid JSON");
  RunReport report;
  report.config_hash = j.value("config_hash", "");
  for (const auto& c : j.at("cells")) {
    CellReport cell;
    cell.scenario = c.at("scenario").get<std::string>();
    cell.penalty = c.at("penalty").get<std::string>();
    cell.model_names = c.at("model_names").get<std::vector<std::string>>();
    for (const auto& ms : c.at("metrics")) {
      MetricSummary m;
      m.cindex = pooled_from_json(ms.at("cindex"));
      m.iauc = pooled_from_json(ms.at("iauc"));
      cell.metrics.push_back(m);
    }
    cell.selected_features =
        c.at("selected_features").get<std::vector<std::string>>();
    cell.selection_counts = c.at("selection_counts").get<std::vector<int>>();
    cell.selection_fallback = c.at("selection_fallback").get<bool>();
    auto w = c.at("bma_weights").get<std::vector<double>>();
    cell.bma_weights = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
    cell.mean_oob_fraction = c.at("mean_oob_fraction").get<double>();
    cell.zero_interval_count = c.at("zero_interval_count").get<int>();
    cell.n_train = c.at("n_train").get<int>();
    cell.n_test = c.at("n_test").get<int>();
    for (const auto& js : c.at("subgroups")) {
      SubgroupResult s;
      s.label = js.at("label").get<std::string>();
      s.n = js.at("n").get<int>();
      s.n_events = js.at("n_events").get<int>();
      s.skipped = js.at("skipped").get<bool>();
      if (!s.skipped) s.cindex = pooled_from_json(js.at("cindex"));
      cell.subgroups.push_back(std::move(s));
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void write_report_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write csv: " + path);
  out << "scenario,penalty,model,agg,cindex_mean,cindex_lo,cindex_hi,"
         "iauc_mean,iauc_lo,iauc_hi\n";
  for (const CellReport& cell : report.cells) {
    for (size_t k = 0; k < cell.model_names.size(); ++k) {
      const std::string& name = cell.model_names[k];
      std::string agg = name == "ea" || name == "bma" ? name : "base";
      const MetricSummary& m = cell.metrics[k];
      out << cell.scenario << ',' << cell.penalty << ',' << name << ',' << agg
          << ',' << fmt(m.cindex.mean, 6) << ',' << fmt(m.cindex.ci_lo, 6)
          << ',' << fmt(m.cindex.ci_hi, 6) << ',' << fmt(m.iauc.mean, 6) << ','
          << fmt(m.iauc.ci_lo, 6) << ',' << fmt(m.iauc.ci_hi, 6) << '\n';
    }
  }
}

void write_wide_csv(const RunReport& report, const std::string& metric,
                    const std::string& path) {
  if (metric != "cindex" && metric != "iauc")
    throw InvalidConfig("metric must be 'cindex' or 'iauc'");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write csv: " + path);
  out << "scenario,penalty";
  if (!report.cells.empty())
    for (const auto& name : report.cells.front().model_names) out << ',' << name;
  out << '\n';
  for (const CellReport& cell : report.cells) {
    out << cell.scenario << ',' << cell.penalty;
    for (size_t k = 0; k < cell.model_names.size(); ++k) {
      const PooledEstimate& p = metric == "cindex" ? cell.metrics[k].cindex
                                                   : cell.metrics[k].iauc;
      out << ",\"" << fmt(p.mean, 3) << " (" << fmt(p.ci_lo, 3) << ", "
          << fmt(p.ci_hi, 3) << ")\"";
    }
    out << '\n';
  }
}

void write_manifest(const AppConfig& cfg, const std::vector<std::string>& outputs,
                    const std::string& path) {
  json j;
  j["version"] = kVersion;
  j["config_hash"] = config_fingerprint(cfg);
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace survens
