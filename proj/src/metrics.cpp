#include "survens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survens/errors.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

KmCurve km_impl(const Eigen::VectorXd& time, const std::vector<int>& event,
                bool flip) {
  const int n = (int)time.size();
  if ((int)event.size() != n) throw LengthMismatch("time and event length differ");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return time[i] < time[j]; });

  std::vector<double> st, ss;
  double surv = 1.0;
  int at_risk = n;
  for (int k = 0; k < n;) {
    int k2 = k;
    int d = 0;
    while (k2 < n && time[order[k2]] == time[order[k]]) {
      int e = event[order[k2]];
      d += flip ? 1 - e : e;
      ++k2;
    }
    if (d > 0) {
      surv *= 1.0 - (double)d / (double)at_risk;
      st.push_back(time[order[k]]);
      ss.push_back(surv);
    }
    at_risk -= k2 - k;
    k = k2;
  }
  KmCurve out;
  out.step_time = Eigen::Map<Eigen::VectorXd>(st.data(), (int)st.size());
  out.step_surv = Eigen::Map<Eigen::VectorXd>(ss.data(), (int)ss.size());
  return out;
}

}  // namespace

double KmCurve::at(double t) const {
  double s = 1.0;
  for (int k = 0; k < step_time.size() && step_time[k] <= t; ++k) s = step_surv[k];
  return s;
}

double KmCurve::at_left(double t) const {
  double s = 1.0;
  for (int k = 0; k < step_time.size() && step_time[k] < t; ++k) s = step_surv[k];
  return s;
}

KmCurve kaplan_meier(const Eigen::VectorXd& time, const std::vector<int>& event) {
  return km_impl(time, event, false);
}

KmCurve censoring_km(const Eigen::VectorXd& time, const std::vector<int>& event) {
  return km_impl(time, event, true);
}

double c_index(const Eigen::VectorXd& scores, const Eigen::VectorXd& time,
               const std::vector<int>& event) {
  const int n = (int)scores.size();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("scores, time, and event must have equal length");
  double num = 0.0;
  long comparable = 0;
  for (int i = 0; i < n; ++i) {
    if (!event[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      bool cmp = time[i] < time[j] || (time[i] == time[j] && !event[j]);
      if (!cmp) continue;
      ++comparable;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  if (comparable == 0) throw NoComparablePairs("no comparable pairs");
  return num / (double)comparable;
}

AucCurve auc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& time,
                   const std::vector<int>& event, int grid_points) {
  const int n = (int)scores.size();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("scores, time, and event must have equal length");
  if (grid_points < 2) throw InvalidConfig("grid_points must be >= 2");

  KmCurve g = censoring_km(time, event);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (!event[i]) continue;
    double gi = g.at_left(time[i]);
    double inv = gi > 0.0 ? 1.0 / gi : 100.0;
    inv = std::min(inv, 100.0);
    w[i] = inv * inv;
  }

  AucCurve out;
  double t_min = time.minCoeff(), t_max = time.maxCoeff();
  out.grid.resize(grid_points);
  out.auc.setZero(grid_points);
  out.defined.assign(grid_points, 0);
  for (int k = 0; k < grid_points; ++k)
    out.grid[k] = t_min + (t_max - t_min) * k / (double)(grid_points - 1);

  // Subjects sorted by time; controls for threshold t are a suffix.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return time[i] < time[j]; });

  for (int k = 0; k < grid_points; ++k) {
    double t = out.grid[k];
    std::vector<double> ctrl;
    std::vector<int> cases;
    for (int m = 0; m < n; ++m) {
      int i = order[m];
      if (time[i] > t) ctrl.push_back(scores[i]);
      else if (event[i] && time[i] <= t) cases.push_back(i);
    }
    if (cases.empty() || ctrl.empty()) continue;
    std::sort(ctrl.begin(), ctrl.end());
    double num = 0.0, wsum = 0.0;
    for (int i : cases) {
      auto lo = std::lower_bound(ctrl.begin(), ctrl.end(), scores[i]);
      auto hi = std::upper_bound(lo, ctrl.end(), scores[i]);
      double below = (double)(lo - ctrl.begin());
      double ties = (double)(hi - lo);
      num += w[i] * (below + 0.5 * ties);
      wsum += w[i];
    }
    if (wsum <= 0.0) continue;
    out.auc[k] = num / (wsum * (double)ctrl.size());
    out.defined[k] = 1;
  }

  // Trapezoid over segments whose endpoints are both defined, renormalized
  // by the covered length.
  double integral = 0.0, length = 0.0;
  for (int k = 0; k + 1 < grid_points; ++k) {
    if (!out.defined[k] || !out.defined[k + 1]) continue;
    double dt = out.grid[k + 1] - out.grid[k];
    integral += 0.5 * (out.auc[k] + out.auc[k + 1]) * dt;
    length += dt;
  }
  if (length > 0.0) {
    out.iauc = integral / length;
    out.iauc_defined = true;
  }
  return out;
}

ImportanceReport permutation_importance(const ScoreFn& score_fn,
                                        const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& time,
                                        const std::vector<int>& event,
                                        const std::vector<std::string>& names,
                                        int n_repeats, uint64_t seed) {
  if ((int)names.size() != x.cols())
    throw LengthMismatch("names must match feature count");
  if (n_repeats < 1) throw InvalidConfig("n_repeats must be >= 1");
  ImportanceReport out;
  out.names = names;
  out.baseline_cindex = c_index(score_fn(x), time, event);
  out.importance.setZero(x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    Rng rng(derive_seed(seed, "perm_" + names[j]));
    double acc = 0.0;
    for (int r = 0; r < n_repeats; ++r) {
      Eigen::MatrixXd xp = x;
      std::vector<int> perm = rng.permutation((int)x.rows());
      for (int i = 0; i < x.rows(); ++i) xp(i, j) = x(perm[i], j);
      acc += c_index(score_fn(xp), time, event);
    }
    out.importance[j] = out.baseline_cindex - acc / (double)n_repeats;
  }
  return out;
}

}  // namespace survens
