#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace survens {

// Elastic-net penalized Cox regression: IRLS outer loop around cyclic
// coordinate descent on the weighted least-squares subproblem, warm
// starts along a descending lambda path, objective kept monotone by step
// halving. The penalized objective is
//   -loglik + lambda * (alpha * |beta|_1 + (1 - alpha)/2 * |beta|_2^2).
struct CoxnetConfig {
  double alpha = 1.0;              // 1 = lasso, towards 0 = ridge
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  std::vector<double> lambda_path; // overrides the generated path if set
  int cv_folds = 5;                // < 2 disables selection by CV
  double tol = 1e-7;
  int max_sweeps = 10000;
  uint64_t seed = 1;
};

struct CoxnetFit {
  std::vector<double> lambda;     // descending
  Eigen::MatrixXd beta;           // p x n_lambda
  std::vector<double> objective;  // penalized nll at each path point
  std::vector<double> cv_nll;     // mean held-out nll (empty without CV)
  int best_index = -1;
  Eigen::VectorXd best_beta;
};

CoxnetFit fit_coxnet(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                     const std::vector<int>& event, const CoxnetConfig& cfg);

// Indices with nonzero coefficients at the selected path point.
std::vector<int> select_features(const CoxnetFit& fit);

// Fold id per subject, events and censorings spread evenly.
std::vector<int> stratified_folds(const std::vector<int>& event, int k,
                                  uint64_t seed);

}  // namespace survens
