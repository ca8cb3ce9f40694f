#include "survens/cox_partial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survens/errors.hpp"

namespace survens {

CoxRiskSums cox_risk_sums(const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& time,
                          const std::vector<int>& event) {
  const int n = (int)eta.size();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("eta, time, and event must have equal length");
  if (std::none_of(event.begin(), event.end(), [](int e) { return e == 1; }))
    throw NoEvents("no events in sample");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return time[i] < time[j]; });

  // Shift by the max so exp() stays finite for any eta.
  const double shift = eta.maxCoeff();
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = std::exp(eta[i] - shift);

  // Suffix risk sums, shared across subjects tied on time.
  Eigen::VectorXd risk(n);
  double acc = 0.0;
  for (int k = n - 1; k >= 0;) {
    int k2 = k;
    while (k2 >= 0 && time[order[k2]] == time[order[k]]) {
      acc += w[order[k2]];
      --k2;
    }
    for (int m = k2 + 1; m <= k; ++m) risk[order[m]] = acc;
    k = k2;
  }

  CoxRiskSums out;
  out.a.setZero(n);
  out.b.setZero(n);
  double cum_a = 0.0, cum_b = 0.0, nll = 0.0;
  for (int k = 0; k < n;) {
    int k2 = k;
    while (k2 < n && time[order[k2]] == time[order[k]]) ++k2;
    double s = risk[order[k]];
    for (int m = k; m < k2; ++m) {
      int i = order[m];
      if (event[i]) {
        cum_a += 1.0 / s;
        cum_b += 1.0 / (s * s);
        nll += std::log(s) + shift - eta[i];
      }
    }
    for (int m = k; m < k2; ++m) {
      out.a[order[m]] = cum_a;
      out.b[order[m]] = cum_b;
    }
    k = k2;
  }
  out.shift = shift;
  out.nll = nll;
  return out;
}

double cox_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& time,
               const std::vector<int>& event) {
  return cox_risk_sums(eta, time, event).nll;
}

CoxGradHess cox_grad_hess(const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& time,
                          const std::vector<int>& event) {
  CoxRiskSums sums = cox_risk_sums(eta, time, event);
  const int n = (int)eta.size();
  CoxGradHess out;
  out.grad.resize(n);
  out.hess.resize(n);
  out.nll = sums.nll;
  for (int i = 0; i < n; ++i) {
    double e = std::exp(eta[i] - sums.shift);
    out.grad[i] = -event[i] + e * sums.a[i];
    out.hess[i] = e * sums.a[i] - e * e * sums.b[i];
  }
  return out;
}

}  // namespace survens
