#include "survens/ensemble.hpp"

#include <cmath>

#include "survens/cox_partial.hpp"
#include "survens/errors.hpp"

namespace survens {

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores) {
  const int n = (int)scores.size();
  if (n == 0) throw LengthMismatch("empty score vector");
  double mean = scores.mean();
  double ss = (scores.array() - mean).square().sum();
  double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  if (sd == 0.0) return Eigen::VectorXd::Zero(n);
  return (scores.array() - mean) / sd;
}

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (int m = 0; m < scores.cols(); ++m)
    out.col(m) = normalize_scores(scores.col(m));
  return out;
}

Eigen::VectorXd aggregate_bma(const Eigen::MatrixXd& normalized,
                              const Eigen::VectorXd& w) {
  if (w.size() != normalized.cols())
    throw LengthMismatch("one weight per model required");
  return normalized * w;
}

Eigen::VectorXd aggregate_ea(const Eigen::MatrixXd& normalized) {
  if (normalized.cols() == 0) throw LengthMismatch("no model columns");
  return aggregate_bma(normalized,
                       Eigen::VectorXd::Constant(normalized.cols(),
                                                 1.0 / normalized.cols()));
}

BmaWeights compute_bma_weights(const Eigen::MatrixXd& val_normalized,
                               const Eigen::VectorXd& val_time,
                               const std::vector<int>& val_event,
                               const Eigen::VectorXd& prior) {
  const int m = (int)val_normalized.cols();
  if (m == 0) throw LengthMismatch("no model columns");
  Eigen::VectorXd p = prior;
  if (p.size() == 0) p = Eigen::VectorXd::Constant(m, 1.0 / m);
  if (p.size() != m) throw LengthMismatch("one prior entry per model required");
  for (int k = 0; k < m; ++k)
    if (p[k] <= 0.0) throw InvalidConfig("prior weights must be positive");

  BmaWeights out;
  out.val_nll.resize(m);
  for (int k = 0; k < m; ++k)
    out.val_nll[k] = cox_nll(val_normalized.col(k), val_time, val_event);
  double best = out.val_nll.minCoeff();
  out.w.resize(m);
  for (int k = 0; k < m; ++k)
    out.w[k] = p[k] * std::exp(-(out.val_nll[k] - best));
  out.w /= out.w.sum();
  return out;
}

}  // namespace survens
