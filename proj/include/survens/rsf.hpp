#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace survens {

// Random survival forest: bootstrap per tree, log-rank split selection,
// Nelson-Aalen cumulative hazard in the leaves. A subject's risk score is
// the forest-averaged cumulative hazard at the largest training event
// time, so higher = worse.
struct RsfConfig {
  int n_trees = 500;
  int mtry = 0;             // 0 picks ceil(sqrt(p))
  int min_node_events = 3;  // events required in each child
  int max_candidates = 32;  // split thresholds tried per feature
  uint64_t seed = 1;
  int jobs = 1;
};

struct RsfNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> chf_time;   // event times in the leaf
  std::vector<double> chf_value;  // cumulative hazard after each
};

struct RsfTree {
  std::vector<RsfNode> nodes;  // nodes[0] is the root
};

struct RsfModel {
  std::vector<RsfTree> trees;
  int n_features = 0;
  double t_max = 0.0;              // largest training event time
  double mean_oob_fraction = 0.0;  // averaged over trees
};

RsfModel fit_rsf(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                 const std::vector<int>& event, const RsfConfig& cfg);

Eigen::VectorXd rsf_risk(const RsfModel& model, const Eigen::MatrixXd& x);

// Cumulative hazard of the leaf x falls into, evaluated at t.
double rsf_tree_chf(const RsfTree& tree, const Eigen::VectorXd& x, double t);

std::string rsf_to_json(const RsfModel& model);
RsfModel rsf_from_json(const std::string& text);

}  // namespace survens
