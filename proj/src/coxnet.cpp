#include "survens/coxnet.hpp"

#include <algorithm>
#include <cmath>

#include "survens/cox_partial.hpp"
#include "survens/errors.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return -(-z - t);
  return 0.0;
}

double penalty(const Eigen::VectorXd& beta, double lambda, double alpha) {
  return lambda * (alpha * beta.lpNorm<1>() +
                   0.5 * (1.0 - alpha) * beta.squaredNorm());
}

struct PathState {
  Eigen::VectorXd beta;
  double objective = 0.0;
};

// One penalized fit at fixed lambda, warm started from state.beta.
void fit_single(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                const std::vector<int>& event, double lambda,
                const CoxnetConfig& cfg, PathState& state) {
  const int n = (int)x.rows(), p = (int)x.cols();
  Eigen::VectorXd beta = state.beta;
  Eigen::VectorXd eta = x * beta;
  CoxGradHess gh = cox_grad_hess(eta, time, event);
  double obj = gh.nll + penalty(beta, lambda, cfg.alpha);

  const double l1 = lambda * cfg.alpha;
  const double l2 = lambda * (1.0 - cfg.alpha);
  int sweeps_left = cfg.max_sweeps;

  for (int outer = 0; outer < 100; ++outer) {
    Eigen::VectorXd w(n), z(n);
    for (int i = 0; i < n; ++i) {
      w[i] = std::max(gh.hess[i], 0.0);
      z[i] = w[i] > 0.0 ? eta[i] - gh.grad[i] / w[i] : eta[i];
    }
    Eigen::VectorXd denom(p);
    for (int j = 0; j < p; ++j)
      denom[j] = (w.array() * x.col(j).array().square()).sum() + l2;

    // Cyclic coordinate descent on the weighted quadratic subproblem.
    Eigen::VectorXd beta_cd = beta;
    Eigen::VectorXd r = z - x * beta_cd;
    while (sweeps_left > 0) {
      --sweeps_left;
      double max_change = 0.0;
      for (int j = 0; j < p; ++j) {
        if (denom[j] <= 0.0) continue;
        double num = (w.array() * x.col(j).array() * r.array()).sum() +
                     denom[j] * beta_cd[j] - l2 * beta_cd[j];
        double bj = soft_threshold(num, l1) / denom[j];
        if (bj != beta_cd[j]) {
          r += x.col(j) * (beta_cd[j] - bj);
          max_change = std::max(max_change, std::abs(bj - beta_cd[j]));
          beta_cd[j] = bj;
        }
      }
      if (max_change < cfg.tol) break;
    }

    // Step-halve towards the warm start until the true objective drops.
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, step *= 0.5) {
      Eigen::VectorXd beta_try = beta + step * (beta_cd - beta);
      Eigen::VectorXd eta_try = x * beta_try;
      CoxGradHess gh_try = cox_grad_hess(eta_try, time, event);
      double obj_try = gh_try.nll + penalty(beta_try, lambda, cfg.alpha);
      if (obj_try <= obj + 1e-12 * (1.0 + std::abs(obj))) {
        bool converged = std::abs(obj - obj_try) < cfg.tol * (1.0 + std::abs(obj));
        beta = beta_try;
        eta = eta_try;
        gh = gh_try;
        obj = obj_try;
        accepted = !converged;
        break;
      }
    }
    if (!accepted || sweeps_left <= 0) break;
  }
  state.beta = beta;
  state.objective = obj;
}

std::vector<double> make_path(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& time,
                              const std::vector<int>& event,
                              const CoxnetConfig& cfg) {
  if (!cfg.lambda_path.empty()) {
    std::vector<double> path = cfg.lambda_path;
    std::sort(path.rbegin(), path.rend());
    return path;
  }
  CoxGradHess gh0 =
      cox_grad_hess(Eigen::VectorXd::Zero(x.rows()), time, event);
  double gmax = 0.0;
  for (int j = 0; j < x.cols(); ++j)
    gmax = std::max(gmax, std::abs(gh0.grad.dot(x.col(j))));
  double lambda_max = gmax / std::max(cfg.alpha, 1e-3);
  if (lambda_max <= 0.0) lambda_max = 1.0;
  std::vector<double> path(cfg.n_lambda);
  double lr = std::log(cfg.lambda_min_ratio);
  for (int l = 0; l < cfg.n_lambda; ++l)
    path[l] = lambda_max *
              std::exp(lr * l / (double)std::max(cfg.n_lambda - 1, 1));
  return path;
}

}  // namespace

std::vector<int> stratified_folds(const std::vector<int>& event, int k,
                                  uint64_t seed) {
  if (k < 2) throw InvalidConfig("need at least 2 folds");
  std::vector<int> ev, ce;
  for (int i = 0; i < (int)event.size(); ++i)
    (event[i] ? ev : ce).push_back(i);
  Rng rng(seed);
  rng.shuffle(ev);
  rng.shuffle(ce);
  std::vector<int> fold(event.size(), 0);
  for (int r = 0; r < (int)ev.size(); ++r) fold[ev[r]] = r % k;
  for (int r = 0; r < (int)ce.size(); ++r) fold[ce[r]] = r % k;
  return fold;
}

CoxnetFit fit_coxnet(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                     const std::vector<int>& event, const CoxnetConfig& cfg) {
  const int n = (int)x.rows(), p = (int)x.cols();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("x, time, and event must agree on row count");
  if (p == 0) throw InvalidConfig("no features");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw InvalidConfig("alpha must lie in [0, 1]");
  if (cfg.lambda_path.empty() && cfg.n_lambda < 1)
    throw InvalidConfig("n_lambda must be >= 1");

  CoxnetFit fit;
  fit.lambda = make_path(x, time, event, cfg);
  const int nl = (int)fit.lambda.size();
  fit.beta.setZero(p, nl);
  fit.objective.assign(nl, 0.0);

  PathState state;
  state.beta.setZero(p);
  for (int l = 0; l < nl; ++l) {
    fit_single(x, time, event, fit.lambda[l], cfg, state);
    fit.beta.col(l) = state.beta;
    fit.objective[l] = state.objective;
  }

  bool do_cv = cfg.cv_folds >= 2 && nl > 1;
  if (do_cv) {
    int n_events = 0;
    for (int e : event) n_events += e;
    if (n_events < cfg.cv_folds)
      throw TooFewEvents("need at least one event per CV fold");
    std::vector<int> fold =
        stratified_folds(event, cfg.cv_folds, derive_seed(cfg.seed, "cv_folds"));
    fit.cv_nll.assign(nl, 0.0);
    for (int f = 0; f < cfg.cv_folds; ++f) {
      std::vector<int> tr, ho;
      for (int i = 0; i < n; ++i) (fold[i] == f ? ho : tr).push_back(i);
      Eigen::MatrixXd xtr(tr.size(), p), xho(ho.size(), p);
      Eigen::VectorXd ttr(tr.size()), tho(ho.size());
      std::vector<int> etr(tr.size()), eho(ho.size());
      for (size_t i = 0; i < tr.size(); ++i) {
        xtr.row(i) = x.row(tr[i]);
        ttr[i] = time[tr[i]];
        etr[i] = event[tr[i]];
      }
      for (size_t i = 0; i < ho.size(); ++i) {
        xho.row(i) = x.row(ho[i]);
        tho[i] = time[ho[i]];
        eho[i] = event[ho[i]];
      }
      PathState fs;
      fs.beta.setZero(p);
      for (int l = 0; l < nl; ++l) {
        fit_single(xtr, ttr, etr, fit.lambda[l], cfg, fs);
        fit.cv_nll[l] += cox_nll(xho * fs.beta, tho, eho);
      }
    }
    for (double& v : fit.cv_nll) v /= (double)cfg.cv_folds;
    fit.best_index =
        (int)(std::min_element(fit.cv_nll.begin(), fit.cv_nll.end()) -
              fit.cv_nll.begin());
  } else {
    fit.best_index = nl - 1;
  }
  fit.best_beta = fit.beta.col(fit.best_index);
  return fit;
}

std::vector<int> select_features(const CoxnetFit& fit) {
  std::vector<int> sel;
  for (int j = 0; j < fit.best_beta.size(); ++j)
    if (fit.best_beta[j] != 0.0) sel.push_back(j);
  if (sel.empty()) throw EmptySelection("no features selected at best lambda");
  return sel;
}

}  // namespace survens
