#pragma once
#include <string>
#include <vector>

#include "survens/dataset.hpp"
#include "survens/pipeline.hpp"
#include "survens/synth.hpp"

namespace survens {

inline constexpr const char* kVersion = "0.1.0";

// Parsed top-level configuration. Exactly one of data/synth supplies the
// cohort. run carries a single-cell template; scenarios/penalties list the
// grid the CLI expands it over.
struct AppConfig {
  bool has_data = false;
  std::string cohort_path;
  CohortSchema schema;

  bool has_synth = false;
  SynthConfig synth;

  RunConfig run;
  std::vector<Scenario> scenarios = {Scenario::BaselineOnly};
  std::vector<std::string> penalties = {"lasso"};

  std::string output_dir = "out";
};

// Load and validate a config file, then apply key=value overrides with
// dotted paths (e.g. "run.seed=7"). Unknown keys anywhere are an error.
AppConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});
AppConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides = {});

// FNV-1a fingerprint of the effective configuration.
std::string config_fingerprint(const AppConfig& cfg);

struct RunReport {
  std::string config_hash;
  std::vector<CellReport> cells;
};

void write_report_json(const RunReport& report, const std::string& path);
RunReport read_report_json(const std::string& path);

// Long-form CSV: one row per cell x model column.
void write_report_csv(const RunReport& report, const std::string& path);

// Wide CSV per metric ("cindex" or "iauc"): one row per cell, one quoted
// "mean (lo, hi)" column per model.
void write_wide_csv(const RunReport& report, const std::string& metric,
                    const std::string& path);

void write_manifest(const AppConfig& cfg, const std::vector<std::string>& outputs,
                    const std::string& path);

}  // namespace survens
