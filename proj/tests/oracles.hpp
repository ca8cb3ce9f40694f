#pragma once
// Independent reference implementations used only by tests. Each is
// written the slow, obvious way (explicit set enumeration, O(n^2) pair
// loops, finite differences) so agreement with the library is meaningful.
#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Negative Breslow partial log-likelihood by direct risk-set enumeration.
inline double cox_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& time,
                      const std::vector<int>& event) {
  double nll = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    if (!event[i]) continue;
    double denom = 0.0;
    for (int j = 0; j < eta.size(); ++j)
      if (time[j] >= time[i]) denom += std::exp(eta[j]);
    nll -= eta[i] - std::log(denom);
  }
  return nll;
}

// Pairwise concordance with explicit comparability rules.
inline double c_index(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                      const std::vector<int>& e) {
  double num = 0.0, den = 0.0;
  const int n = (int)s.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool comparable =
          (e[i] == 1 && t[i] < t[j]) || (e[i] == 1 && e[j] == 0 && t[i] == t[j]);
      if (!comparable) continue;
      den += 1.0;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / den;
}

// Unweighted cumulative/dynamic AUC at horizon t: cases are events by t,
// controls are subjects still at risk after t. Valid as a cross-check
// when there is no censoring before t (all IPCW weights equal).
inline double auc_at(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                     const std::vector<int>& e, double horizon) {
  double num = 0.0, den = 0.0;
  const int n = (int)s.size();
  for (int i = 0; i < n; ++i) {
    if (!(e[i] == 1 && t[i] <= horizon)) continue;
    for (int j = 0; j < n; ++j) {
      if (!(t[j] > horizon)) continue;
      den += 1.0;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / den;
}

// Kaplan-Meier survival at t via the product over distinct event times.
inline double km_at(const Eigen::VectorXd& time, const std::vector<int>& event,
                    double t) {
  std::vector<double> times;
  for (int i = 0; i < time.size(); ++i)
    if (event[i] && time[i] <= t) times.push_back(time[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double surv = 1.0;
  for (double tk : times) {
    double d = 0.0, at_risk = 0.0;
    for (int i = 0; i < time.size(); ++i) {
      if (time[i] >= tk) at_risk += 1.0;
      if (event[i] && time[i] == tk) d += 1.0;
    }
    surv *= 1.0 - d / at_risk;
  }
  return surv;
}

// Central finite difference of f at x.
inline double fd_grad(const std::function<double(double)>& f, double x,
                      double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double fd_second(const std::function<double(double)>& f, double x,
                        double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace oracle
