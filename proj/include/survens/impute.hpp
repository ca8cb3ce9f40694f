#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace survens {

// Chained-equations imputation with Bayesian linear regression
// conditionals. Missing entries are NaN; every other entry is treated as
// observed. Chains are independently seeded, so results do not depend on
// the number of worker threads.
struct MiceConfig {
  int m = 5;               // number of completed datasets
  int n_iter = 10;         // sweeps per chain
  double prior_precision = 1e-6;
  double prior_a = 1e-3;   // inverse-gamma shape
  double prior_b = 1e-3;   // inverse-gamma scale
  uint64_t seed = 1;
  int jobs = 1;
};

struct ImputationSet {
  std::vector<Eigen::MatrixXd> completed;  // m matrices, NaN-free
};

ImputationSet mice_impute(const Eigen::MatrixXd& x, const MiceConfig& cfg);

// Rubin combination of one scalar estimate across completed datasets.
struct PooledEstimate {
  double mean = 0.0;
  double within_var = 0.0;
  double between_var = 0.0;
  double total_var = 0.0;
  double df = 0.0;           // +inf when degenerate
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool degenerate = false;   // between-imputation variance is zero
};

PooledEstimate pool_estimates(const std::vector<double>& estimates,
                              const std::vector<double>& variances,
                              double alpha = 0.05);

}  // namespace survens
