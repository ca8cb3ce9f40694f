#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace survens {

// Feed-forward Cox network trained full-batch on the partial likelihood.
// Backpropagation is written out by hand; the loss reported and optimized
// is the mean negative partial log-likelihood plus L2 weight decay.
struct MlpConfig {
  std::vector<int> hidden = {32, 32};
  std::string activation = "relu";  // or "tanh"
  double dropout = 0.1;             // inverted dropout on hidden layers
  std::string optimizer = "adam";   // or "sgd"
  double learning_rate = 1e-3;
  double momentum = 0.9;            // sgd only
  double weight_decay = 0.0;
  double clip_norm = 5.0;           // global gradient norm cap
  int epochs = 500;
  uint64_t seed = 1;
};

struct DeepSurvModel {
  std::vector<Eigen::MatrixXd> w;  // layer weights, out x in
  std::vector<Eigen::VectorXd> b;
  std::string activation;
  int n_features = 0;
  std::vector<double> loss_trace;  // [0] is the pre-training loss
};

DeepSurvModel fit_deepsurv(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& time,
                           const std::vector<int>& event,
                           const MlpConfig& cfg);

// Linear predictor of the network, dropout off.
Eigen::VectorXd deepsurv_risk(const DeepSurvModel& model,
                              const Eigen::MatrixXd& x);

// Loss and parameter gradients at the model's current weights, dropout
// off. Exposed so the gradients can be checked numerically.
struct DeepSurvGrads {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

DeepSurvGrads deepsurv_loss_grad(const DeepSurvModel& model,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& time,
                                 const std::vector<int>& event,
                                 double weight_decay);

std::string deepsurv_to_json(const DeepSurvModel& model);
DeepSurvModel deepsurv_from_json(const std::string& text);

}  // namespace survens
