#pragma once
#include <Eigen/Core>
#include <vector>

namespace survens {

// Breslow-tie partial likelihood pieces shared by the Cox-family learners.
// For subject i with linear predictor eta_i:
//   nll   = -sum_{i: event} [eta_i - log S(t_i)],  S(t) = sum_{t_j >= t} exp(eta_j)
//   grad_i = -d_i + exp(eta_i) * A_i
//   hess_i =  exp(eta_i) * A_i - exp(eta_i)^2 * B_i   (diagonal approximation)
// where A_i and B_i accumulate 1/S and 1/S^2 over event times <= t_i.
// a and b are kept on the shifted scale (eta - shift, shift = max eta).
// Each product exp(eta_i - shift) / S(t_k) is at most 1 because subject i
// belongs to that risk set, so gradient terms stay bounded even when the
// linear predictors span hundreds of units.
struct CoxRiskSums {
  Eigen::VectorXd a;  // per-subject sum of 1/S(t_k) over event times t_k <= t_i
  Eigen::VectorXd b;  // same with 1/S(t_k)^2
  double shift = 0.0;
  double nll = 0.0;
};

CoxRiskSums cox_risk_sums(const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& time,
                          const std::vector<int>& event);

double cox_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& time,
               const std::vector<int>& event);

struct CoxGradHess {
  Eigen::VectorXd grad;
  Eigen::VectorXd hess;
  double nll = 0.0;
};

CoxGradHess cox_grad_hess(const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& time,
                          const std::vector<int>& event);

}  // namespace survens
