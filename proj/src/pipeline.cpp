#include "survens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include "survens/cox_partial.hpp"
#include "survens/ensemble.hpp"
#include "survens/errors.hpp"
#include "survens/metrics.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Slice {
  Eigen::MatrixXd x;
  Eigen::VectorXd time;
  std::vector<int> event;
};

Slice make_slice(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                 const std::vector<int>& event, const std::vector<int>& rows) {
  Slice s;
  s.x.resize(rows.size(), x.cols());
  s.time.resize(rows.size());
  s.event.resize(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    s.x.row(k) = x.row(rows[k]);
    s.time[k] = time[rows[k]];
    s.event[k] = event[rows[k]];
  }
  return s;
}

uint64_t row_hash(const Eigen::MatrixXd& x, int row, int imputation) {
  Eigen::VectorXd r = x.row(row);
  uint64_t h = fnv1a64(&imputation, sizeof(imputation));
  return fnv1a64(r.data(), r.size() * sizeof(double), h);
}

double coxnet_alpha(const RunConfig& cfg) {
  if (cfg.penalty == "lasso") return 1.0;
  if (cfg.penalty == "elastic_net") return cfg.elastic_net_alpha;
  throw InvalidConfig("penalty must be 'lasso' or 'elastic_net'");
}

// Nonzero coefficients at the CV-chosen lambda; when that set is empty,
// fall back to the strongest coefficients anywhere along the path.
std::vector<int> select_or_fallback(const CoxnetFit& fit, int top_k,
                                    bool* used_fallback) {
  try {
    return select_features(fit);
  } catch (const EmptySelection&) {
    *used_fallback = true;
    const int p = (int)fit.beta.rows();
    Eigen::VectorXd strength = fit.beta.cwiseAbs().rowwise().maxCoeff();
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return strength[a] > strength[b]; });
    order.resize(std::min(top_k, p));
    std::sort(order.begin(), order.end());
    return order;
  }
}

struct FitResult {
  ScoreFn scorer;
  double oob_fraction = std::numeric_limits<double>::quiet_NaN();
};

struct BaseLearner {
  std::string name;
  std::function<FitResult(const Slice&, uint64_t)> fit;
};

std::vector<BaseLearner> make_learners(const RunConfig& cfg) {
  std::vector<BaseLearner> out;
  out.push_back({"rsf", [&cfg](const Slice& tr, uint64_t seed) {
                   RsfConfig c = cfg.rsf;
                   c.seed = seed;
                   c.jobs = cfg.jobs;
                   auto model = std::make_shared<RsfModel>(
                       fit_rsf(tr.x, tr.time, tr.event, c));
                   FitResult r;
                   r.oob_fraction = model->mean_oob_fraction;
                   r.scorer = [model](const Eigen::MatrixXd& x) {
                     return rsf_risk(*model, x);
                   };
                   return r;
                 }});
  out.push_back({"deepsurv", [&cfg](const Slice& tr, uint64_t seed) {
                   MlpConfig c = cfg.deepsurv;
                   c.seed = seed;
                   auto model = std::make_shared<DeepSurvModel>(
                       fit_deepsurv(tr.x, tr.time, tr.event, c));
                   FitResult r;
                   r.scorer = [model](const Eigen::MatrixXd& x) {
                     return deepsurv_risk(*model, x);
                   };
                   return r;
                 }});
  out.push_back({"xgboost", [&cfg](const Slice& tr, uint64_t /*seed*/) {
                   auto model = std::make_shared<GbcoxModel>(
                       fit_gbcox(tr.x, tr.time, tr.event, cfg.gbcox));
                   FitResult r;
                   r.scorer = [model](const Eigen::MatrixXd& x) {
                     return gbcox_risk(*model, x);
                   };
                   return r;
                 }});
  return out;
}

double safe_cindex(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                   const std::vector<int>& e) {
  try {
    return c_index(s, t, e);
  } catch (const NoComparablePairs&) {
    return kNan;
  }
}

double safe_iauc(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                 const std::vector<int>& e) {
  try {
    AucCurve curve = auc_curve(s, t, e);
    return curve.iauc_defined ? curve.iauc : kNan;
  } catch (const NoEvents&) {
    return kNan;
  } catch (const NoComparablePairs&) {
    return kNan;
  }
}

double var_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (double)(v.size() - 1);
}

std::string bin_label(double lo, double hi, bool last) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%g, %g%c", lo, hi, last ? ']' : ')');
  return buf;
}

}  // namespace

std::vector<int> split_test_indices(const std::vector<int>& event,
                                    double test_fraction, uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw InvalidConfig("test_fraction must lie in (0, 1)");
  std::vector<int> ev, ce;
  for (int i = 0; i < (int)event.size(); ++i)
    (event[i] ? ev : ce).push_back(i);
  if (ev.size() < 2)
    throw TooFewEvents("need at least 2 events to split");
  Rng rng(seed);
  rng.shuffle(ev);
  rng.shuffle(ce);
  int n_ev = std::clamp((int)std::lround(test_fraction * ev.size()), 1,
                        (int)ev.size() - 1);
  int n_ce = std::clamp((int)std::lround(test_fraction * ce.size()), 0,
                        (int)ce.size());
  std::vector<int> test(ev.begin(), ev.begin() + n_ev);
  test.insert(test.end(), ce.begin(), ce.begin() + n_ce);
  std::sort(test.begin(), test.end());
  return test;
}

CellReport run_cell(const CohortTable& cohort, const RunConfig& cfg) {
  if (cfg.cv_folds < 2) throw InvalidConfig("cv_folds must be >= 2");
  if (cfg.mice_m < 1) throw InvalidConfig("mice_m must be >= 1");
  const double alpha = coxnet_alpha(cfg);

  DesignBuild build = build_design(cohort, cfg.scenario);
  const Eigen::VectorXd& time = build.data.time;
  const std::vector<int>& event = build.data.event;
  const int n = build.data.n();

  CellReport report;
  report.scenario = scenario_name(cfg.scenario);
  report.penalty = cfg.penalty;
  report.zero_interval_count = build.zero_interval_count;
  report.model_names = {"rsf", "deepsurv", "xgboost", "ea", "bma"};

  std::vector<int> test_idx =
      split_test_indices(event, cfg.test_fraction, derive_seed(cfg.seed, "split"));
  std::vector<int> train_idx;
  {
    std::vector<char> is_test(n, 0);
    for (int i : test_idx) is_test[i] = 1;
    for (int i = 0; i < n; ++i)
      if (!is_test[i]) train_idx.push_back(i);
  }
  report.n_train = (int)train_idx.size();
  report.n_test = (int)test_idx.size();

  MiceConfig mice_cfg;
  mice_cfg.m = cfg.mice_m;
  mice_cfg.n_iter = cfg.mice_iter;
  mice_cfg.seed = derive_seed(cfg.seed, "mice");
  mice_cfg.jobs = cfg.jobs;
  ImputationSet imputations = mice_impute(build.data.x, mice_cfg);

  std::set<uint64_t> train_hashes, test_hashes;
  auto audit_rows = [&](const Eigen::MatrixXd& x, const std::vector<int>& rows,
                        int m, std::set<uint64_t>& dest) {
    for (int i : rows) dest.insert(row_hash(x, i, m));
  };

  // Feature selection per imputation; the modeling set is the union.
  std::vector<std::set<int>> per_imp_selection(cfg.mice_m);
  for (int m = 0; m < cfg.mice_m; ++m) {
    const Eigen::MatrixXd& xm = imputations.completed[m];
    audit_rows(xm, train_idx, m, train_hashes);
    audit_rows(xm, test_idx, m, test_hashes);
    Slice train = make_slice(xm, time, event, train_idx);
    Standardizer std_all = fit_standardizer(train.x, build.is_onehot);
    Eigen::MatrixXd xs = apply_standardizer(std_all, train.x);
    CoxnetConfig cc;
    cc.alpha = alpha;
    cc.n_lambda = cfg.selection_n_lambda;
    cc.cv_folds = cfg.selection_cv_folds;
    cc.seed = derive_seed(cfg.seed, "coxnet_m" + std::to_string(m));
    CoxnetFit fit = fit_coxnet(xs, train.time, train.event, cc);
    bool fallback = false;
    std::vector<int> sel =
        select_or_fallback(fit, cfg.fallback_top_k, &fallback);
    report.selection_fallback = report.selection_fallback || fallback;
    per_imp_selection[m].insert(sel.begin(), sel.end());
  }

  std::set<int> union_sel;
  for (const auto& s : per_imp_selection) union_sel.insert(s.begin(), s.end());
  std::vector<int> keep(union_sel.begin(), union_sel.end());
  for (int j : keep) {
    report.selected_features.push_back(build.data.feature_names[j]);
    int count = 0;
    for (const auto& s : per_imp_selection) count += s.count(j) ? 1 : 0;
    report.selection_counts.push_back(count);
  }
  std::vector<std::uint8_t> keep_onehot;
  for (int j : keep) keep_onehot.push_back(build.is_onehot[j]);

  std::vector<BaseLearner> learners = make_learners(cfg);
  const int n_base = (int)learners.size();
  const int n_cols = n_base + 2;  // + ea + bma

  std::vector<std::vector<double>> est_cindex(n_cols), est_iauc(n_cols);
  std::vector<std::vector<double>> var_cindex(n_cols), var_iauc(n_cols);
  Eigen::VectorXd bma_weight_acc = Eigen::VectorXd::Zero(n_base);

  int subgroup_col = -1;
  int n_bins = 0;
  if (!cfg.subgroup.column.empty()) {
    auto it = std::find(build.data.feature_names.begin(),
                        build.data.feature_names.end(), cfg.subgroup.column);
    if (it == build.data.feature_names.end())
      throw InvalidConfig("subgroup column '" + cfg.subgroup.column +
                          "' is not a design feature");
    if (cfg.subgroup.edges.size() < 2)
      throw InvalidConfig("subgroup needs at least 2 bin edges");
    for (size_t k = 1; k < cfg.subgroup.edges.size(); ++k)
      if (cfg.subgroup.edges[k] <= cfg.subgroup.edges[k - 1])
        throw InvalidConfig("subgroup edges must be strictly increasing");
    subgroup_col = (int)(it - build.data.feature_names.begin());
    n_bins = (int)cfg.subgroup.edges.size() - 1;
  }
  std::vector<std::vector<double>> subgroup_est(n_bins);
  std::vector<int> subgroup_n(n_bins, 0), subgroup_events(n_bins, 0);

  for (int m = 0; m < cfg.mice_m; ++m) {
    Eigen::MatrixXd xm(n, (int)keep.size());
    for (size_t c = 0; c < keep.size(); ++c)
      xm.col(c) = imputations.completed[m].col(keep[c]);
    Slice train = make_slice(xm, time, event, train_idx);
    Slice test = make_slice(xm, time, event, test_idx);
    Standardizer scaler = fit_standardizer(train.x, keep_onehot);
    train.x = apply_standardizer(scaler, train.x);
    test.x = apply_standardizer(scaler, test.x);

    // Inner CV on the training half: within-imputation variance of each
    // metric plus fold-level BMA weights.
    std::vector<int> fold = stratified_folds(
        train.event, cfg.cv_folds, derive_seed(cfg.seed, "cv_m" + std::to_string(m)));
    std::vector<std::vector<double>> fold_cindex(n_cols), fold_iauc(n_cols);
    Eigen::VectorXd w_acc = Eigen::VectorXd::Zero(n_base);
    int w_folds = 0;
    for (int f = 0; f < cfg.cv_folds; ++f) {
      std::vector<int> fit_rows, val_rows;
      for (int i = 0; i < (int)train.event.size(); ++i)
        (fold[i] == f ? val_rows : fit_rows).push_back(i);
      int val_events = 0;
      for (int i : val_rows) val_events += train.event[i];
      if (val_rows.empty() || val_events == 0) continue;
      Slice ftr = make_slice(train.x, train.time, train.event, fit_rows);
      Slice fva = make_slice(train.x, train.time, train.event, val_rows);
      Eigen::MatrixXd scores(fva.x.rows(), n_base);
      for (int b = 0; b < n_base; ++b) {
        uint64_t s = derive_seed(cfg.seed, "m" + std::to_string(m) + "_f" +
                                               std::to_string(f) + "_" +
                                               learners[b].name);
        scores.col(b) = learners[b].fit(ftr, s).scorer(fva.x);
      }
      Eigen::MatrixXd norm = normalize_columns(scores);
      BmaWeights bw = compute_bma_weights(norm, fva.time, fva.event);
      w_acc += bw.w;
      ++w_folds;
      Eigen::VectorXd ea = aggregate_ea(norm);
      Eigen::VectorXd bma = aggregate_bma(norm, bw.w);
      for (int col = 0; col < n_cols; ++col) {
        Eigen::VectorXd s = col < n_base ? norm.col(col)
                            : col == n_base ? ea
                                            : bma;
        double ci = safe_cindex(s, fva.time, fva.event);
        if (!std::isnan(ci)) fold_cindex[col].push_back(ci);
        double ia = safe_iauc(s, fva.time, fva.event);
        if (!std::isnan(ia)) fold_iauc[col].push_back(ia);
      }
    }
    if (w_folds == 0)
      throw TooFewEvents("no CV fold had events to weight the ensemble");
    Eigen::VectorXd w_bar = w_acc / (double)w_folds;
    w_bar /= w_bar.sum();
    bma_weight_acc += w_bar;

    Eigen::MatrixXd test_scores(test.x.rows(), n_base);
    for (int b = 0; b < n_base; ++b) {
      uint64_t s = derive_seed(cfg.seed, "m" + std::to_string(m) + "_full_" +
                                             learners[b].name);
      FitResult fitted = learners[b].fit(train, s);
      test_scores.col(b) = fitted.scorer(test.x);
      if (m == 0 && !std::isnan(fitted.oob_fraction))
        report.mean_oob_fraction = fitted.oob_fraction;
    }
    Eigen::MatrixXd test_norm = normalize_columns(test_scores);
    Eigen::VectorXd ea = aggregate_ea(test_norm);
    Eigen::VectorXd bma = aggregate_bma(test_norm, w_bar);
    for (int col = 0; col < n_cols; ++col) {
      Eigen::VectorXd s = col < n_base ? test_norm.col(col)
                          : col == n_base ? ea
                                          : bma;
      est_cindex[col].push_back(safe_cindex(s, test.time, test.event));
      est_iauc[col].push_back(safe_iauc(s, test.time, test.event));
      var_cindex[col].push_back(var_of(fold_cindex[col]) /
                                std::max((int)fold_cindex[col].size(), 1));
      var_iauc[col].push_back(var_of(fold_iauc[col]) /
                              std::max((int)fold_iauc[col].size(), 1));
    }

    if (subgroup_col >= 0) {
      for (int bb = 0; bb < n_bins; ++bb) {
        double lo = cfg.subgroup.edges[bb], hi = cfg.subgroup.edges[bb + 1];
        bool last = bb == n_bins - 1;
        std::vector<int> rows;
        for (size_t k = 0; k < test_idx.size(); ++k) {
          double v = imputations.completed[m](test_idx[k], subgroup_col);
          if (v >= lo && (v < hi || (last && v == hi))) rows.push_back((int)k);
        }
        if (m == 0) {
          subgroup_n[bb] = (int)rows.size();
          for (int k : rows) subgroup_events[bb] += test.event[k];
        }
        if (rows.empty()) continue;
        Eigen::VectorXd s(rows.size()), t(rows.size());
        std::vector<int> e(rows.size());
        for (size_t k = 0; k < rows.size(); ++k) {
          s[k] = ea[rows[k]];
          t[k] = test.time[rows[k]];
          e[k] = test.event[rows[k]];
        }
        double ci = safe_cindex(s, t, e);
        if (!std::isnan(ci)) subgroup_est[bb].push_back(ci);
      }
    }
  }

  report.bma_weights = bma_weight_acc / (double)cfg.mice_m;
  report.metrics.resize(n_cols);
  for (int col = 0; col < n_cols; ++col) {
    report.metrics[col].cindex =
        pool_estimates(est_cindex[col], var_cindex[col]);
    report.metrics[col].iauc = pool_estimates(est_iauc[col], var_iauc[col]);
  }

  for (int bb = 0; bb < n_bins; ++bb) {
    SubgroupResult res;
    res.label = bin_label(cfg.subgroup.edges[bb], cfg.subgroup.edges[bb + 1],
                          bb == n_bins - 1);
    res.n = subgroup_n[bb];
    res.n_events = subgroup_events[bb];
    if (subgroup_est[bb].empty()) {
      res.skipped = true;
    } else {
      std::vector<double> zeros(subgroup_est[bb].size(), 0.0);
      res.cindex = pool_estimates(subgroup_est[bb], zeros);
    }
    report.subgroups.push_back(std::move(res));
  }

  report.audit.train_hashes.assign(train_hashes.begin(), train_hashes.end());
  report.audit.test_hashes.assign(test_hashes.begin(), test_hashes.end());
  return report;
}

}  // namespace survens
