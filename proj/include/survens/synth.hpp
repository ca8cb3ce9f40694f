#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

#include "survens/dataset.hpp"

namespace survens {

// Cohort generator with a Weibull proportional-hazards ground truth.
// Numeric covariates drift linearly (baseline + per-month slope); the
// linear predictor is eta = x0' true_beta + slope' slope_beta.
struct SynthConfig {
  int n_subjects = 100;
  int n_numeric = 5;
  int n_categorical = 0;
  int n_categories = 3;                // levels per categorical covariate
  std::vector<double> true_beta;       // length n_numeric + n_categorical
  std::vector<double> slope_beta;      // length n_numeric
  double baseline_hazard_scale = 48.0; // Weibull scale, months
  double baseline_hazard_shape = 1.5;
  double censor_rate = 0.0;            // target fraction in [0,1)
  double missing_rate = 0.0;           // MCAR fraction in [0,1)
  std::vector<double> visit_times = {0.0, 6.0, 12.0};
  double visit_jitter_sd = 0.0;
  double visit_noise_sd = 0.0;         // measurement noise on numeric visits
  uint64_t seed = 1;
};

struct GroundTruth {
  Eigen::VectorXd eta;            // per subject
  std::vector<double> true_beta;
  std::vector<double> slope_beta;
  Eigen::MatrixXd slopes;         // n_subjects x n_numeric
  double achieved_censoring = 0.0;
  double weibull_scale = 0.0;
  double weibull_shape = 0.0;
};

struct SynthResult {
  CohortTable cohort;
  GroundTruth truth;
};

SynthResult generate(const SynthConfig& cfg);

// Schema matching the column layout generate() produces.
CohortSchema synth_schema(const SynthConfig& cfg);

void save_ground_truth(const GroundTruth& truth, const SynthConfig& cfg,
                       const std::string& path);

}  // namespace survens
