#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

namespace survens {

// Score-level aggregation across base learners. Model scores live on
// different scales, so each column is z-normalized before averaging.
Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores);
Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& scores);

// Equal-weight average of normalized columns.
Eigen::VectorXd aggregate_ea(const Eigen::MatrixXd& normalized);

// Approximate posterior model weights from validation partial likelihood:
// w_m proportional to prior_m * exp(-nll_m), computed against the
// smallest nll so the exponentials stay in range.
struct BmaWeights {
  Eigen::VectorXd w;        // sums to one
  Eigen::VectorXd val_nll;  // per-model validation nll
};

BmaWeights compute_bma_weights(const Eigen::MatrixXd& val_normalized,
                               const Eigen::VectorXd& val_time,
                               const std::vector<int>& val_event,
                               const Eigen::VectorXd& prior = Eigen::VectorXd());

Eigen::VectorXd aggregate_bma(const Eigen::MatrixXd& normalized,
                              const Eigen::VectorXd& w);

}  // namespace survens
