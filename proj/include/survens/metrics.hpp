#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace survens {

// Right-continuous Kaplan-Meier step function.
struct KmCurve {
  Eigen::VectorXd step_time;  // event times where the curve drops
  Eigen::VectorXd step_surv;  // survival just after each drop
  double at(double t) const;       // S(t)
  double at_left(double t) const;  // S(t-)
};

KmCurve kaplan_meier(const Eigen::VectorXd& time, const std::vector<int>& event);

// KM of the censoring distribution (treats censorings as events).
KmCurve censoring_km(const Eigen::VectorXd& time, const std::vector<int>& event);

// Harrell concordance for risk scores (higher score = earlier event).
// Comparable pairs: t_i < t_j with event_i, or t_i == t_j with
// event_i and not event_j. Tied scores count 1/2.
double c_index(const Eigen::VectorXd& scores, const Eigen::VectorXd& time,
               const std::vector<int>& event);

// Cumulative/dynamic AUC(t) with IPCW case weights on an evenly spaced
// grid spanning the observed times. Grid points with no cases or no
// controls are flagged undefined and excluded from the integral.
struct AucCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd auc;
  std::vector<std::uint8_t> defined;
  double iauc = 0.0;
  bool iauc_defined = false;
};

AucCurve auc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& time,
                   const std::vector<int>& event, int grid_points = 100);

// Drop in concordance when one feature column is permuted.
struct ImportanceReport {
  std::vector<std::string> names;
  Eigen::VectorXd importance;
  double baseline_cindex = 0.0;
};

using ScoreFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

ImportanceReport permutation_importance(const ScoreFn& score_fn,
                                        const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& time,
                                        const std::vector<int>& event,
                                        const std::vector<std::string>& names,
                                        int n_repeats, uint64_t seed);

}  // namespace survens
