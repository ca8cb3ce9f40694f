#pragma once
#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "survens/errors.hpp"

namespace survens {

// One measurement occasion. values aligns with CohortTable::covariate_names;
// nullopt marks a missing cell.
struct Visit {
  double time_months = 0.0;
  std::vector<std::optional<double>> values;
};

struct SubjectRecord {
  std::string id;
  std::vector<Visit> visits;  // sorted strictly ascending by time; first at 0
  double event_time_months = 0.0;
  bool event = false;  // true = progressed, false = censored
};

struct CohortTable {
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> covariate_names;
  std::vector<std::string> categorical_names;  // subset of covariate_names
  std::vector<std::string> static_names;       // subset; no delta features built

  bool is_categorical(const std::string& name) const;
  bool is_static(const std::string& name) const;
  int covariate_index(const std::string& name) const;  // -1 if absent
};

// Column-role map for long-format CSV. Categorical covariates are treated
// as static (demographic-style); static_covariates lists numeric columns
// that additionally get no delta features.
struct CohortSchema {
  std::string id_column = "id";
  std::string visit_time_column = "time";
  std::string event_time_column = "event_time";
  std::string event_column = "event";
  std::vector<std::string> covariates;         // longitudinal numeric
  std::vector<std::string> static_covariates;  // numeric, static
  std::vector<std::string> categorical;        // static categorical
};

CohortTable load_cohort(const std::string& path, const CohortSchema& schema);
void save_cohort(const CohortTable& c, const std::string& path);

// Keeps each subject's first min(max_visits, available) visits.
CohortTable truncate_visits(const CohortTable& c, int max_visits);

bool cohorts_equal(const CohortTable& a, const CohortTable& b, double rel_tol = 1e-12);

// Per-subject design row with outcomes; the unit every learner consumes.
// x may contain NaN before imputation, never after.
struct SurvivalDataset {
  Eigen::MatrixXd x;  // n_subjects x p
  std::vector<std::string> feature_names;
  Eigen::VectorXd time;
  std::vector<int> event;  // 1 = event, 0 = censored

  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }
  bool has_missing() const { return x.hasNaN(); }
  int n_events() const;
  SurvivalDataset subset_rows(const std::vector<int>& idx) const;
  SurvivalDataset subset_cols(const std::vector<int>& cols) const;
};

}  // namespace survens
