#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "survens/dataset.hpp"

namespace survens {

// Which visits feed the design matrix. BaselineOnly uses the first visit;
// TwoVisits adds per-month change between visits 0 and 1; ThreeVisits adds
// the change between visits 1 and 2 as well.
enum class Scenario { BaselineOnly, TwoVisits, ThreeVisits };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct DesignBuild {
  SurvivalDataset data;               // NaN marks missing entries
  std::vector<std::uint8_t> is_onehot;
  int zero_interval_count = 0;        // visit pairs too close to difference
};

// Feature layout: longitudinal numerics at baseline, static numerics,
// K-1 dummy columns per categorical (smallest observed level is the
// reference), then delta columns named <cov>_d01 / <cov>_d12. Deltas are
// per-month rates using each subject's actual visit times; a delta is NaN
// when either visit or value is absent.
DesignBuild build_design(const CohortTable& cohort, Scenario scenario);

// Train-fitted centering and scaling. One-hot columns pass through;
// zero-variance columns are centered only and flagged.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<std::uint8_t> is_onehot;
  std::vector<std::uint8_t> is_constant;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& x_train,
                              const std::vector<std::uint8_t>& is_onehot);

Eigen::MatrixXd apply_standardizer(const Standardizer& s,
                                   const Eigen::MatrixXd& x);

}  // namespace survens
