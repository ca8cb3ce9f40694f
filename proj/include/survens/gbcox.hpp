#pragma once
#include <Eigen/Core>
#include <string>
#include <vector>

namespace survens {

// Gradient-boosted regression trees on the Cox partial likelihood,
// second-order style: each round fits an exact greedy tree to the current
// per-subject gradient g and hessian h, with leaf weight -G/(H+lambda)
// and split gain
//   0.5 * [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma.
struct GbcoxConfig {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  double gamma = 0.0;   // minimum gain to keep a split
  double lambda = 1.0;  // L2 on leaf weights
};

struct GbNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
};

struct GbTree {
  std::vector<GbNode> nodes;
};

struct GbcoxModel {
  std::vector<GbTree> trees;
  int n_features = 0;
  double learning_rate = 0.0;
  std::vector<double> nll_trace;  // [0] is the loss at eta = 0
};

GbcoxModel fit_gbcox(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                     const std::vector<int>& event, const GbcoxConfig& cfg);

Eigen::VectorXd gbcox_risk(const GbcoxModel& model, const Eigen::MatrixXd& x);

std::string gbcox_to_json(const GbcoxModel& model);
GbcoxModel gbcox_from_json(const std::string& text);

}  // namespace survens
