#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "survens/dataset.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
  const char* env = std::getenv("SURVENS_BIN");
  return env ? env : SURVENS_BIN;
}

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "survens_cli_tests";
  fs::create_directories(d);
  return d;
}

// Runs the pipeline binary, captures exit code plus combined output.
struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  fs::path log = work_dir() / "last_output.txt";
  std::string cmd = cli_bin() + " " + args + " > " + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Small synthetic setup sized for quick end-to-end runs.
json base_config(const std::string& out_dir) {
  json j;
  j["synth"] = {{"n_subjects", 60},   {"n_numeric", 3},
                {"true_beta", {1.0, -0.7, 0.0}}, {"slope_beta", {0.5, 0.0, 0.0}},
                {"censor_rate", 0.2}, {"missing_rate", 0.05},
                {"seed", 9}};
  j["run"] = {{"scenarios", {"baseline"}},
              {"penalties", {"lasso"}},
              {"test_fraction", 0.25},
              {"cv_folds", 3},
              {"mice_m", 2},
              {"mice_iter", 3},
              {"selection_cv_folds", 2},
              {"selection_n_lambda", 10},
              {"seed", 3},
              {"rsf", {{"n_trees", 8}}},
              {"deepsurv", {{"hidden", {4}}, {"epochs", 10}, {"dropout", 0.0}}},
              {"xgboost", {{"n_rounds", 8}}}};
  j["output_dir"] = out_dir;
  return j;
}

fs::path write_config(const std::string& name, const json& j) {
  fs::path p = work_dir() / name;
  write_file(p, j.dump(2));
  return p;
}

}  // namespace

TEST_CASE("help exits cleanly and bad invocations do not") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("").code == 1);                      // a subcommand is required
  CHECK(run_cli("frobnicate --config x.json").code == 1);
  CHECK(run_cli("run --config " +
                (work_dir() / "no_such_config.json").string())
            .code == 1);
}

TEST_CASE("generate writes a loadable cohort and its ground truth") {
  fs::path cfg = write_config("gen.json", base_config((work_dir() / "gen_out").string()));
  fs::path cohort = work_dir() / "cohort.csv";
  fs::path truth = work_dir() / "truth.json";
  CliResult r = run_cli("generate --config " + cfg.string() + " --out " +
                        cohort.string() + " --truth " + truth.string());
  CHECK(r.code == 0);
  REQUIRE(fs::exists(cohort));
  REQUIRE(fs::exists(truth));

  survens::CohortSchema schema;
  schema.covariates = {"x0", "x1", "x2"};
  survens::CohortTable t = survens::load_cohort(cohort.string(), schema);
  CHECK(t.subjects.size() == 60);
  CHECK(t.covariate_names == std::vector<std::string>{"x0", "x1", "x2"});

  json tj = json::parse(slurp(truth));
  CHECK(tj.at("n_subjects").get<int>() == 60);
  CHECK(tj.at("true_beta").get<std::vector<double>>() ==
        std::vector<double>{1.0, -0.7, 0.0});
}

TEST_CASE("run emits the full report bundle with a clean audit") {
  fs::path out = work_dir() / "run_a";
  fs::remove_all(out);
  fs::path cfg = write_config("run_a.json", base_config(out.string()));
  CliResult r = run_cli("run --config " + cfg.string());
  CHECK(r.code == 0);
  for (const char* f : {"report.json", "report.csv", "report_cindex.csv",
                        "report_iauc.csv", "manifest.json"})
    CHECK(fs::exists(out / f));

  json rep = json::parse(slurp(out / "report.json"));
  CHECK(rep.at("version").get<std::string>() == "0.1.0");
  CHECK(rep.at("config_hash").get<std::string>().size() == 16);
  REQUIRE(rep.at("cells").size() == 1);
  const json& cell = rep.at("cells")[0];
  CHECK(cell.at("scenario") == "baseline");
  CHECK(cell.at("penalty") == "lasso");
  CHECK(cell.at("model_names").get<std::vector<std::string>>() ==
        std::vector<std::string>{"rsf", "deepsurv", "xgboost", "ea", "bma"});
  CHECK(cell.at("metrics").size() == 5);
  CHECK(cell.at("audit").at("overlap").get<int>() == 0);
  CHECK(cell.at("audit").at("train_rows").get<int>() > 0);
  CHECK(cell.at("n_train").get<int>() + cell.at("n_test").get<int>() == 60);

  std::string csv = slurp(out / "report.csv");
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "scenario,penalty,model,agg,cindex_mean,cindex_lo,cindex_hi,"
        "iauc_mean,iauc_lo,iauc_hi");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  CHECK(csv.find("baseline,lasso,ea,ea,") != std::string::npos);
  CHECK(csv.find("baseline,lasso,rsf,base,") != std::string::npos);

  std::string wide = slurp(out / "report_cindex.csv");
  CHECK(wide.find("scenario,penalty,rsf,deepsurv,xgboost,ea,bma") == 0);
  CHECK(wide.find("(") != std::string::npos);  // quoted interval cells

  json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("config_hash") == rep.at("config_hash"));
  CHECK(manifest.at("outputs").size() == 4);
}

TEST_CASE("identical configs reproduce byte-identical tables") {
  fs::path out_a = work_dir() / "repro_a";
  fs::path out_b = work_dir() / "repro_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::path cfg_a = write_config("repro_a.json", base_config(out_a.string()));
  fs::path cfg_b = write_config("repro_b.json", base_config(out_b.string()));
  REQUIRE(run_cli("run --config " + cfg_a.string()).code == 0);
  REQUIRE(run_cli("run --config " + cfg_b.string()).code == 0);
  CHECK(slurp(out_a / "report.csv") == slurp(out_b / "report.csv"));
  CHECK(slurp(out_a / "report_cindex.csv") == slurp(out_b / "report_cindex.csv"));
  CHECK(slurp(out_a / "report_iauc.csv") == slurp(out_b / "report_iauc.csv"));
}

TEST_CASE("overrides change the fingerprint and reach the pipeline") {
  fs::path out = work_dir() / "override_out";
  fs::remove_all(out);
  fs::path cfg = write_config("override.json", base_config(out.string()));
  REQUIRE(run_cli("run --config " + cfg.string()).code == 0);
  std::string base_hash =
      json::parse(slurp(out / "manifest.json")).at("config_hash");

  fs::path out2 = work_dir() / "override_out2";
  fs::remove_all(out2);
  CliResult r = run_cli("run --config " + cfg.string() + " --set run.seed=7" +
                        " --set output_dir=" + out2.string());
  REQUIRE(r.code == 0);
  std::string new_hash =
      json::parse(slurp(out2 / "manifest.json")).at("config_hash");
  CHECK(new_hash != base_hash);
  CHECK(slurp(out / "report.csv") != slurp(out2 / "report.csv"));
}

TEST_CASE("unknown config keys are rejected by their dotted path") {
  fs::path out = work_dir() / "unused";
  json bad = base_config(out.string());
  bad["run"]["bogus_knob"] = 1;
  fs::path cfg = write_config("bad_key.json", bad);
  CliResult r = run_cli("run --config " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("unknown key 'run.bogus_knob'") != std::string::npos);

  fs::path cfg2 = write_config("good_key.json", base_config(out.string()));
  CliResult r2 = run_cli("run --config " + cfg2.string() +
                         " --set run.rsf.depth=4");
  CHECK(r2.code == 1);
  CHECK(r2.output.find("unknown key 'run.rsf.depth'") != std::string::npos);
}

TEST_CASE("report re-renders tables that match the original run") {
  fs::path out = work_dir() / "rerender_src";
  fs::remove_all(out);
  fs::path cfg = write_config("rerender.json", base_config(out.string()));
  REQUIRE(run_cli("run --config " + cfg.string()).code == 0);
  fs::path out2 = work_dir() / "rerender_dst";
  fs::remove_all(out2);
  CliResult r = run_cli("report --report " + (out / "report.json").string() +
                        " --out-dir " + out2.string());
  CHECK(r.code == 0);
  CHECK(slurp(out / "report.csv") == slurp(out2 / "report.csv"));
  CHECK(slurp(out / "report_cindex.csv") == slurp(out2 / "report_cindex.csv"));
  CHECK(slurp(out / "report_iauc.csv") == slurp(out2 / "report_iauc.csv"));
}

TEST_CASE("impute, select, fit, and evaluate cooperate on one cohort") {
  fs::path cfg = write_config("stages.json",
                              base_config((work_dir() / "stages_out").string()));
  fs::path prefix = work_dir() / "design";
  CliResult ri = run_cli("impute --config " + cfg.string() +
                         " --scenario baseline --out-prefix " + prefix.string());
  CHECK(ri.code == 0);
  REQUIRE(fs::exists(prefix.string() + "_0.csv"));
  REQUIRE(fs::exists(prefix.string() + "_1.csv"));
  std::string design = slurp(prefix.string() + "_0.csv");
  CHECK(design.rfind("x0,x1,x2,time,event", 0) == 0);
  CHECK(design.find("nan") == std::string::npos);

  fs::path sel = work_dir() / "selection.json";
  CliResult rs = run_cli("select --config " + cfg.string() +
                         " --scenario baseline --penalty lasso --out " +
                         sel.string());
  CHECK(rs.code == 0);
  json sj = json::parse(slurp(sel));
  CHECK(sj.at("features").size() >= 1);
  CHECK(sj.at("features").size() == sj.at("counts").size());

  fs::path models = work_dir() / "models";
  fs::remove_all(models);
  CliResult rf = run_cli("fit --config " + cfg.string() +
                         " --scenario baseline --out-dir " + models.string());
  CHECK(rf.code == 0);
  for (const char* f : {"fit.json", "rsf.json", "deepsurv.json", "xgboost.json"})
    CHECK(fs::exists(models / f));

  fs::path metrics = work_dir() / "metrics.json";
  CliResult re = run_cli("evaluate --config " + cfg.string() + " --models " +
                         models.string() + " --out " + metrics.string());
  CHECK(re.code == 0);
  json mj = json::parse(slurp(metrics));
  for (const char* name : {"rsf", "deepsurv", "xgboost", "ea"}) {
    double ci = mj.at(name).at("cindex").get<double>();
    CHECK(ci >= 0.0);
    CHECK(ci <= 1.0);
  }
  // In-sample scoring on informative data should comfortably beat chance.
  CHECK(mj.at("ea").at("cindex").get<double>() > 0.6);
}

TEST_CASE("runtime failures exit with a distinct status") {
  // A cohort with one event cannot support a stratified split.
  survens::CohortTable c;
  c.covariate_names = {"z"};
  for (int i = 0; i < 8; ++i) {
    survens::SubjectRecord s;
    s.id = "p" + std::to_string(i);
    s.event_time_months = 5.0 + i;
    s.event = i == 0;
    survens::Visit v;
    v.time_months = 0.0;
    v.values = {0.5 * i};
    s.visits.push_back(v);
    c.subjects.push_back(std::move(s));
  }
  fs::path cohort = work_dir() / "one_event.csv";
  survens::save_cohort(c, cohort.string());

  json j;
  j["data"] = {{"cohort", cohort.string()},
               {"schema", {{"covariates", {"z"}}}}};
  j["run"] = {{"scenarios", {"baseline"}}, {"penalties", {"lasso"}},
              {"mice_m", 1}, {"mice_iter", 2}, {"cv_folds", 2}};
  j["output_dir"] = (work_dir() / "fail_out").string();
  fs::path cfg = write_config("one_event.json", j);
  CliResult r = run_cli("run --config " + cfg.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("error:") != std::string::npos);
}
