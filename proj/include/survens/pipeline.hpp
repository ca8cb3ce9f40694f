#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "survens/coxnet.hpp"
#include "survens/dataset.hpp"
#include "survens/deepsurv.hpp"
#include "survens/features.hpp"
#include "survens/gbcox.hpp"
#include "survens/impute.hpp"
#include "survens/rsf.hpp"

namespace survens {

// One experiment cell: scenario x penalty on a single cohort. The flow is
// design build -> train/test split -> multiple imputation -> per-imputation
// feature selection -> per-imputation model fits with inner CV (within-
// imputation variance and BMA weights) -> test metrics -> Rubin pooling.
struct SubgroupConfig {
  std::string column;          // design feature holding the bin values
  std::vector<double> edges;   // half-open bins, last bin closed
};

struct RunConfig {
  Scenario scenario = Scenario::BaselineOnly;
  std::string penalty = "lasso";  // or "elastic_net"
  double elastic_net_alpha = 0.5;
  double test_fraction = 0.2;
  int cv_folds = 5;
  int mice_m = 5;
  int mice_iter = 10;
  int selection_cv_folds = 5;
  int selection_n_lambda = 100;
  int fallback_top_k = 10;
  RsfConfig rsf;
  MlpConfig deepsurv;
  GbcoxConfig gbcox;
  SubgroupConfig subgroup;
  uint64_t seed = 1;
  int jobs = 1;
};

struct MetricSummary {
  PooledEstimate cindex;
  PooledEstimate iauc;
};

struct SubgroupResult {
  std::string label;
  int n = 0;
  int n_events = 0;
  bool skipped = false;  // empty bin or no comparable pairs
  PooledEstimate cindex;
};

// Row-content fingerprints of everything that reached a fitting stage
// (selection, standardizers, inner CV, BMA weighting) versus the held-out
// test rows, for auditing that no test row fed any fit.
struct LeakageAudit {
  std::vector<uint64_t> train_hashes;  // sorted, unique
  std::vector<uint64_t> test_hashes;
};

struct CellReport {
  std::string scenario;
  std::string penalty;
  std::vector<std::string> model_names;  // rsf deepsurv xgboost ea bma
  std::vector<MetricSummary> metrics;    // aligned with model_names
  std::vector<std::string> selected_features;  // union over imputations
  std::vector<int> selection_counts;     // imputations that picked each
  bool selection_fallback = false;
  Eigen::VectorXd bma_weights;           // base learner weights, averaged
  double mean_oob_fraction = 0.0;
  int zero_interval_count = 0;
  int n_train = 0;
  int n_test = 0;
  std::vector<SubgroupResult> subgroups;
  LeakageAudit audit;
};

CellReport run_cell(const CohortTable& cohort, const RunConfig& cfg);

// Test-set subject indices under the stratified split run_cell uses.
std::vector<int> split_test_indices(const std::vector<int>& event,
                                    double test_fraction, uint64_t seed);

}  // namespace survens
