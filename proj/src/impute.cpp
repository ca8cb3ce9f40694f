#include "survens/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "survens/errors.hpp"
#include "survens/parallel.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

// One posterior draw of (theta, sigma^2) under the normal-inverse-gamma
// prior, then predictive draws for the missing rows of the target column.
void impute_column(Eigen::MatrixXd& x, int target,
                   const std::vector<int>& obs_rows,
                   const std::vector<int>& mis_rows, const MiceConfig& cfg,
                   Rng& rng) {
  const int p = (int)x.cols();  // predictors = other columns + intercept
  const int n_obs = (int)obs_rows.size();
  Eigen::MatrixXd design(n_obs, p);
  Eigen::VectorXd y(n_obs);
  for (int r = 0; r < n_obs; ++r) {
    int i = obs_rows[r];
    design(r, 0) = 1.0;
    int c = 1;
    for (int j = 0; j < (int)x.cols(); ++j)
      if (j != target) design(r, c++) = x(i, j);
    y[r] = x(i, target);
  }

  Eigen::MatrixXd a = design.transpose() * design;
  a.diagonal().array() += cfg.prior_precision;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    a.diagonal().array() += 1e-8;
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw SingularDesign("imputation design matrix is singular");
  }
  Eigen::VectorXd xty = design.transpose() * y;
  Eigen::VectorXd m_n = llt.solve(xty);

  double a_n = cfg.prior_a + 0.5 * n_obs;
  double b_n = cfg.prior_b + 0.5 * (y.squaredNorm() - m_n.dot(a * m_n));
  b_n = std::max(b_n, 1e-12);
  double sigma2 = b_n / rng.gamma(a_n);
  double sigma = std::sqrt(sigma2);

  Eigen::MatrixXd v_n = llt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> vchol(v_n);
  if (vchol.info() != Eigen::Success)
    throw SingularDesign("posterior covariance is not positive definite");
  Eigen::VectorXd z(p);
  for (int j = 0; j < p; ++j) z[j] = rng.normal();
  Eigen::VectorXd correlated = vchol.matrixL() * z;
  Eigen::VectorXd theta = m_n + sigma * correlated;

  for (int i : mis_rows) {
    double mu = theta[0];
    int c = 1;
    for (int j = 0; j < (int)x.cols(); ++j)
      if (j != target) mu += theta[c++] * x(i, j);
    x(i, target) = mu + rng.normal(0.0, sigma);
  }
}

}  // namespace

ImputationSet mice_impute(const Eigen::MatrixXd& x, const MiceConfig& cfg) {
  if (cfg.m < 1) throw InvalidConfig("m must be >= 1");
  if (cfg.n_iter < 1) throw InvalidConfig("n_iter must be >= 1");
  const int n = (int)x.rows(), p = (int)x.cols();
  if (n == 0 || p == 0) throw InvalidConfig("empty matrix");

  std::vector<std::vector<int>> obs(p), mis(p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)
      (std::isnan(x(i, j)) ? mis[j] : obs[j]).push_back(i);

  ImputationSet out;
  out.completed.assign(cfg.m, x);

  std::vector<int> targets;
  for (int j = 0; j < p; ++j) {
    if (mis[j].empty()) continue;
    if (obs[j].empty())
      throw NoCompletePredictors("column " + std::to_string(j) +
                                 " has no observed values");
    targets.push_back(j);
  }
  if (targets.empty()) return out;  // nothing missing: m identical copies

  // Least-missing columns are imputed first each sweep.
  std::sort(targets.begin(), targets.end(),
            [&](int a, int b) { return mis[a].size() < mis[b].size(); });

  Eigen::VectorXd col_mean(p);
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int i : obs[j]) s += x(i, j);
    col_mean[j] = obs[j].empty() ? 0.0 : s / (double)obs[j].size();
  }

  parallel_for((int)out.completed.size(), cfg.jobs, [&](int chain) {
    Rng rng(derive_seed(cfg.seed, "mice_chain_" + std::to_string(chain)));
    Eigen::MatrixXd& xc = out.completed[chain];
    for (int j : targets)
      for (int i : mis[j]) xc(i, j) = col_mean[j];
    for (int it = 0; it < cfg.n_iter; ++it)
      for (int j : targets) impute_column(xc, j, obs[j], mis[j], cfg, rng);
  });
  return out;
}

PooledEstimate pool_estimates(const std::vector<double>& estimates,
                              const std::vector<double>& variances,
                              double alpha) {
  const int m = (int)estimates.size();
  if (m < 1 || variances.size() != estimates.size())
    throw LengthMismatch("estimates and variances must be non-empty and equal length");
  if (alpha <= 0.0 || alpha >= 1.0) throw InvalidConfig("alpha must lie in (0, 1)");
  for (double v : variances)
    if (v < 0.0) throw InvalidConfig("variances must be >= 0");

  PooledEstimate out;
  out.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / m;
  out.within_var =
      std::accumulate(variances.begin(), variances.end(), 0.0) / m;
  double b = 0.0;
  for (double e : estimates) b += (e - out.mean) * (e - out.mean);
  out.between_var = m > 1 ? b / (m - 1) : 0.0;
  double infl = (1.0 + 1.0 / m) * out.between_var;
  out.total_var = out.within_var + infl;

  double q;
  if (out.between_var <= 0.0 || m < 2) {
    out.degenerate = true;
    out.df = std::numeric_limits<double>::infinity();
    q = boost::math::quantile(boost::math::normal_distribution<>(),
                              1.0 - alpha / 2.0);
  } else {
    // Linear in (1 + W / ((1 + 1/m) B)) by design; the two-imputation
    // example in the tests pins this form.
    double r = out.within_var / infl;
    out.df = (m - 1) * (1.0 + r);
    q = boost::math::quantile(boost::math::students_t_distribution<>(out.df),
                              1.0 - alpha / 2.0);
  }
  double half = q * std::sqrt(out.total_var);
  out.ci_lo = out.mean - half;
  out.ci_hi = out.mean + half;
  return out;
}

}  // namespace survens
