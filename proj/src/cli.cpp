#include "survens/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "survens/config.hpp"
#include "survens/coxnet.hpp"
#include "survens/dataset.hpp"
#include "survens/deepsurv.hpp"
#include "survens/ensemble.hpp"
#include "survens/errors.hpp"
#include "survens/features.hpp"
#include "survens/gbcox.hpp"
#include "survens/impute.hpp"
#include "survens/metrics.hpp"
#include "survens/pipeline.hpp"
#include "survens/rng.hpp"
#include "survens/rsf.hpp"
#include "survens/synth.hpp"

namespace survens {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

CohortTable obtain_cohort(const AppConfig& cfg) {
  if (cfg.has_data) return load_cohort(cfg.cohort_path, cfg.schema);
  if (cfg.has_synth) return generate(cfg.synth).cohort;
  throw ConfigError("config needs a data or synth block");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Completed design CSV: features, then the outcome columns.
void write_design_csv(const std::string& path, const Eigen::MatrixXd& x,
                      const std::vector<std::string>& names,
                      const Eigen::VectorXd& time,
                      const std::vector<int>& event) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  for (size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << ",time,event\n";
  char buf[64];
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", x(i, j));
      out << (j ? "," : "") << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", time[i]);
    out << ',' << buf << ',' << event[i] << '\n';
  }
}

struct SelectionOutcome {
  std::vector<std::string> features;
  std::vector<int> counts;
  bool fallback = false;
};

// Selection over every subject (no held-out split): per-imputation coxnet
// on standardized features, union across imputations.
SelectionOutcome run_selection(const AppConfig& cfg, const std::string& penalty,
                               const DesignBuild& build,
                               const ImputationSet& imputations) {
  const RunConfig& r = cfg.run;
  double alpha = penalty == "lasso" ? 1.0 : r.elastic_net_alpha;
  if (penalty != "lasso" && penalty != "elastic_net")
    throw ConfigError("unknown penalty '" + penalty + "'");
  std::vector<std::set<int>> sel_m;
  bool fallback_used = false;
  for (size_t m = 0; m < imputations.completed.size(); ++m) {
    const Eigen::MatrixXd& xm = imputations.completed[m];
    Standardizer scaler = fit_standardizer(xm, build.is_onehot);
    Eigen::MatrixXd xs = apply_standardizer(scaler, xm);
    CoxnetConfig cc;
    cc.alpha = alpha;
    cc.n_lambda = r.selection_n_lambda;
    cc.cv_folds = r.selection_cv_folds;
    cc.seed = derive_seed(r.seed, "select_m" + std::to_string(m));
    CoxnetFit fit = fit_coxnet(xs, build.data.time, build.data.event, cc);
    std::set<int> sel;
    try {
      auto s = select_features(fit);
      sel.insert(s.begin(), s.end());
    } catch (const EmptySelection&) {
      fallback_used = true;
      Eigen::VectorXd strength = fit.beta.cwiseAbs().rowwise().maxCoeff();
      std::vector<int> order(fit.beta.rows());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return strength[a] > strength[b]; });
      order.resize(std::min<size_t>(r.fallback_top_k, order.size()));
      sel.insert(order.begin(), order.end());
    }
    sel_m.push_back(std::move(sel));
  }
  std::set<int> all;
  for (const auto& s : sel_m) all.insert(s.begin(), s.end());
  SelectionOutcome out;
  out.fallback = fallback_used;
  for (int j : all) {
    out.features.push_back(build.data.feature_names[j]);
    int c = 0;
    for (const auto& s : sel_m) c += s.count(j) ? 1 : 0;
    out.counts.push_back(c);
  }
  return out;
}

int cmd_generate(const AppConfig& cfg, const std::string& out_path,
                 const std::string& truth_path) {
  if (!cfg.has_synth) throw ConfigError("generate needs a synth block");
  SynthResult result = generate(cfg.synth);
  save_cohort(result.cohort, out_path);
  std::string tp = truth_path.empty() ? out_path + ".truth.json" : truth_path;
  save_ground_truth(result.truth, cfg.synth, tp);
  std::cout << "wrote " << out_path << " (" << result.cohort.subjects.size()
            << " subjects, achieved censoring "
            << result.truth.achieved_censoring << ")\n";
  return 0;
}

int cmd_impute(const AppConfig& cfg, const std::string& scenario,
               const std::string& out_prefix) {
  CohortTable cohort = obtain_cohort(cfg);
  DesignBuild build = build_design(cohort, scenario_from_name(scenario));
  MiceConfig mc;
  mc.m = cfg.run.mice_m;
  mc.n_iter = cfg.run.mice_iter;
  mc.seed = derive_seed(cfg.run.seed, "mice");
  mc.jobs = cfg.run.jobs;
  ImputationSet set = mice_impute(build.data.x, mc);
  for (size_t m = 0; m < set.completed.size(); ++m) {
    std::string path = out_prefix + "_" + std::to_string(m) + ".csv";
    write_design_csv(path, set.completed[m], build.data.feature_names,
                     build.data.time, build.data.event);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

int cmd_select(const AppConfig& cfg, const std::string& scenario,
               const std::string& penalty, const std::string& out_path) {
  CohortTable cohort = obtain_cohort(cfg);
  DesignBuild build = build_design(cohort, scenario_from_name(scenario));
  MiceConfig mc;
  mc.m = cfg.run.mice_m;
  mc.n_iter = cfg.run.mice_iter;
  mc.seed = derive_seed(cfg.run.seed, "mice");
  mc.jobs = cfg.run.jobs;
  ImputationSet set = mice_impute(build.data.x, mc);
  SelectionOutcome sel = run_selection(cfg, penalty, build, set);
  json j;
  j["scenario"] = scenario;
  j["penalty"] = penalty;
  j["features"] = sel.features;
  j["counts"] = sel.counts;
  write_text(out_path, j.dump(2));
  std::cout << "selected " << sel.features.size() << " features -> " << out_path
            << "\n";
  return 0;
}

int cmd_fit(const AppConfig& cfg, const std::string& scenario,
            const std::string& penalty, const std::string& out_dir) {
  CohortTable cohort = obtain_cohort(cfg);
  DesignBuild build = build_design(cohort, scenario_from_name(scenario));
  MiceConfig mc;
  mc.m = cfg.run.mice_m;
  mc.n_iter = cfg.run.mice_iter;
  mc.seed = derive_seed(cfg.run.seed, "mice");
  mc.jobs = cfg.run.jobs;
  ImputationSet set = mice_impute(build.data.x, mc);
  SelectionOutcome sel = run_selection(cfg, penalty, build, set);

  std::vector<int> keep;
  std::vector<std::uint8_t> keep_onehot;
  for (const auto& name : sel.features) {
    auto it = std::find(build.data.feature_names.begin(),
                        build.data.feature_names.end(), name);
    keep.push_back((int)(it - build.data.feature_names.begin()));
  }
  for (int jx : keep) keep_onehot.push_back(build.is_onehot[jx]);

  const Eigen::MatrixXd& x0 = set.completed.front();
  Eigen::MatrixXd xsub(x0.rows(), (int)keep.size());
  for (size_t c = 0; c < keep.size(); ++c) xsub.col(c) = x0.col(keep[c]);
  Standardizer scaler = fit_standardizer(xsub, keep_onehot);
  Eigen::MatrixXd xs = apply_standardizer(scaler, xsub);

  fs::create_directories(out_dir);
  RsfConfig rc = cfg.run.rsf;
  rc.seed = derive_seed(cfg.run.seed, "fit_rsf");
  rc.jobs = cfg.run.jobs;
  RsfModel rsf = fit_rsf(xs, build.data.time, build.data.event, rc);
  write_text(out_dir + "/rsf.json", rsf_to_json(rsf));
  MlpConfig dc = cfg.run.deepsurv;
  dc.seed = derive_seed(cfg.run.seed, "fit_deepsurv");
  DeepSurvModel ds = fit_deepsurv(xs, build.data.time, build.data.event, dc);
  write_text(out_dir + "/deepsurv.json", deepsurv_to_json(ds));
  GbcoxModel gb = fit_gbcox(xs, build.data.time, build.data.event, cfg.run.gbcox);
  write_text(out_dir + "/xgboost.json", gbcox_to_json(gb));

  json meta;
  meta["scenario"] = scenario;
  meta["penalty"] = penalty;
  meta["features"] = sel.features;
  meta["standardizer"] = {
      {"mean", std::vector<double>(scaler.mean.data(),
                                   scaler.mean.data() + scaler.mean.size())},
      {"scale", std::vector<double>(scaler.scale.data(),
                                    scaler.scale.data() + scaler.scale.size())},
      {"is_onehot", std::vector<int>(scaler.is_onehot.begin(),
                                     scaler.is_onehot.end())}};
  meta["models"] = {"rsf.json", "deepsurv.json", "xgboost.json"};
  write_text(out_dir + "/fit.json", meta.dump(2));
  std::cout << "wrote models to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const AppConfig& cfg, const std::string& models_dir,
                 const std::string& out_path) {
  json meta = json::parse(read_text(models_dir + "/fit.json"));
  CohortTable cohort = obtain_cohort(cfg);
  DesignBuild build =
      build_design(cohort, scenario_from_name(meta.at("scenario")));

  MiceConfig mc;
  mc.m = 1;
  mc.n_iter = cfg.run.mice_iter;
  mc.seed = derive_seed(cfg.run.seed, "evaluate_mice");
  ImputationSet set = mice_impute(build.data.x, mc);

  auto features = meta.at("features").get<std::vector<std::string>>();
  Eigen::MatrixXd xsub(build.data.n(), (int)features.size());
  for (size_t c = 0; c < features.size(); ++c) {
    auto it = std::find(build.data.feature_names.begin(),
                        build.data.feature_names.end(), features[c]);
    if (it == build.data.feature_names.end())
      throw FeatureMismatch("model feature '" + features[c] +
                            "' missing from cohort design");
    xsub.col(c) = set.completed.front().col(
        (int)(it - build.data.feature_names.begin()));
  }
  Standardizer scaler;
  auto mean = meta.at("standardizer").at("mean").get<std::vector<double>>();
  auto scale = meta.at("standardizer").at("scale").get<std::vector<double>>();
  auto onehot = meta.at("standardizer").at("is_onehot").get<std::vector<int>>();
  scaler.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), mean.size());
  scaler.scale = Eigen::Map<Eigen::VectorXd>(scale.data(), scale.size());
  scaler.is_onehot.assign(onehot.begin(), onehot.end());
  scaler.is_constant.assign(onehot.size(), 0);
  Eigen::MatrixXd xs = apply_standardizer(scaler, xsub);

  RsfModel rsf = rsf_from_json(read_text(models_dir + "/rsf.json"));
  DeepSurvModel ds = deepsurv_from_json(read_text(models_dir + "/deepsurv.json"));
  GbcoxModel gb = gbcox_from_json(read_text(models_dir + "/xgboost.json"));

  Eigen::MatrixXd scores(xs.rows(), 3);
  scores.col(0) = rsf_risk(rsf, xs);
  scores.col(1) = deepsurv_risk(ds, xs);
  scores.col(2) = gbcox_risk(gb, xs);
  Eigen::MatrixXd norm = normalize_columns(scores);
  Eigen::VectorXd ea = aggregate_ea(norm);

  json out;
  const char* names[] = {"rsf", "deepsurv", "xgboost", "ea"};
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd s = k < 3 ? norm.col(k) : ea;
    json m;
    m["cindex"] = c_index(s, build.data.time, build.data.event);
    AucCurve curve = auc_curve(s, build.data.time, build.data.event);
    m["iauc"] = curve.iauc_defined ? json(curve.iauc) : json();
    out[names[k]] = std::move(m);
  }
  write_text(out_path, out.dump(2));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_run(const AppConfig& cfg) {
  CohortTable cohort = obtain_cohort(cfg);
  fs::create_directories(cfg.output_dir);
  RunReport report;
  report.config_hash = config_fingerprint(cfg);
  for (Scenario scenario : cfg.scenarios) {
    for (const std::string& penalty : cfg.penalties) {
      RunConfig cell = cfg.run;
      cell.scenario = scenario;
      cell.penalty = penalty;
      cell.seed =
          derive_seed(cfg.run.seed, scenario_name(scenario) + "_" + penalty);
      std::cerr << "cell " << scenario_name(scenario) << " x " << penalty
                << "...\n";
      report.cells.push_back(run_cell(cohort, cell));
    }
  }
  std::string base = cfg.output_dir + "/";
  write_report_json(report, base + "report.json");
  write_report_csv(report, base + "report.csv");
  write_wide_csv(report, "cindex", base + "report_cindex.csv");
  write_wide_csv(report, "iauc", base + "report_iauc.csv");
  write_manifest(cfg,
                 {"report.json", "report.csv", "report_cindex.csv",
                  "report_iauc.csv"},
                 base + "manifest.json");
  std::cout << "wrote " << base << "report.json and csv tables ("
            << report.cells.size() << " cells)\n";
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_dir) {
  RunReport report = read_report_json(report_path);
  fs::create_directories(out_dir);
  std::string base = out_dir + "/";
  write_report_csv(report, base + "report.csv");
  write_wide_csv(report, "cindex", base + "report_cindex.csv");
  write_wide_csv(report, "iauc", base + "report_iauc.csv");
  std::cout << "rendered csv tables to " << out_dir << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"survival ensemble pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir = "out", truth_path;
  std::string scenario = "baseline", penalty = "lasso";
  std::string out_prefix = "imputed", models_dir, report_path;
  std::vector<std::string> overrides;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (json)")->required();
    cmd->add_option("--set", overrides,
                    "override config values, e.g. --set run.seed=7");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic cohort");
  add_config(generate);
  generate->add_option("--out", out_path, "cohort csv path")->required();
  generate->add_option("--truth", truth_path, "ground truth json path");

  CLI::App* impute = app.add_subcommand("impute", "write completed designs");
  add_config(impute);
  impute->add_option("--scenario", scenario, "baseline|two_visits|three_visits");
  impute->add_option("--out-prefix", out_prefix, "output path prefix");

  CLI::App* select = app.add_subcommand("select", "penalized feature selection");
  add_config(select);
  select->add_option("--scenario", scenario, "baseline|two_visits|three_visits");
  select->add_option("--penalty", penalty, "lasso|elastic_net");
  select->add_option("--out", out_path, "selection json path")->required();

  CLI::App* fit = app.add_subcommand("fit", "fit base learners, save models");
  add_config(fit);
  fit->add_option("--scenario", scenario, "baseline|two_visits|three_visits");
  fit->add_option("--penalty", penalty, "lasso|elastic_net");
  fit->add_option("--out-dir", out_dir, "model output directory");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score saved models");
  add_config(evaluate);
  evaluate->add_option("--models", models_dir, "directory from fit")->required();
  evaluate->add_option("--out", out_path, "metrics json path")->required();

  CLI::App* run = app.add_subcommand("run", "full pipeline over the grid");
  add_config(run);

  CLI::App* report = app.add_subcommand("report", "render csv tables");
  report->add_option("--report", report_path, "report.json path")->required();
  report->add_option("--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (report->parsed()) return cmd_report(report_path, out_dir);
    AppConfig cfg = load_config(config_path, overrides);
    if (generate->parsed()) return cmd_generate(cfg, out_path, truth_path);
    if (impute->parsed()) return cmd_impute(cfg, scenario, out_prefix);
    if (select->parsed()) return cmd_select(cfg, scenario, penalty, out_path);
    if (fit->parsed()) return cmd_fit(cfg, scenario, penalty, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(cfg, models_dir, out_path);
    if (run->parsed()) return cmd_run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace survens
