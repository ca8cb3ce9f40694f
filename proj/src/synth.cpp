#include "survens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "survens/errors.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.n_subjects < 1) throw InvalidConfig("n_subjects must be >= 1");
  if (cfg.n_numeric < 0 || cfg.n_categorical < 0)
    throw InvalidConfig("covariate counts must be >= 0");
  if (cfg.n_numeric + cfg.n_categorical < 1)
    throw InvalidConfig("need at least one covariate");
  if (cfg.n_categorical > 0 && cfg.n_categories < 2)
    throw InvalidConfig("n_categories must be >= 2");
  if ((int)cfg.true_beta.size() != cfg.n_numeric + cfg.n_categorical)
    throw InvalidConfig("true_beta must have n_numeric + n_categorical entries");
  if ((int)cfg.slope_beta.size() != cfg.n_numeric)
    throw InvalidConfig("slope_beta must have n_numeric entries");
  if (cfg.baseline_hazard_scale <= 0.0 || cfg.baseline_hazard_shape <= 0.0)
    throw InvalidConfig("Weibull scale and shape must be positive");
  if (cfg.censor_rate < 0.0 || cfg.censor_rate >= 1.0)
    throw InvalidConfig("censor_rate must lie in [0, 1)");
  if (cfg.missing_rate < 0.0 || cfg.missing_rate >= 1.0)
    throw InvalidConfig("missing_rate must lie in [0, 1)");
  if (cfg.visit_times.empty() || cfg.visit_times.front() != 0.0)
    throw InvalidConfig("visit_times must start at 0");
  for (size_t k = 1; k < cfg.visit_times.size(); ++k)
    if (cfg.visit_times[k] <= cfg.visit_times[k - 1])
      throw InvalidConfig("visit_times must be strictly increasing");
  if (cfg.visit_jitter_sd < 0.0 || cfg.visit_noise_sd < 0.0)
    throw InvalidConfig("jitter and noise sd must be >= 0");
}

// Mean censoring probability under C ~ Exp(rho), monotone in rho.
double censor_fraction(double rho, const Eigen::VectorXd& t_event) {
  double s = 0.0;
  for (int i = 0; i < t_event.size(); ++i) s += 1.0 - std::exp(-rho * t_event[i]);
  return s / (double)t_event.size();
}

double calibrate_rho(double target, const Eigen::VectorXd& t_event) {
  double lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);
    if (censor_fraction(mid, t_event) < target) lo = mid; else hi = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace

CohortSchema synth_schema(const SynthConfig& cfg) {
  CohortSchema schema;
  for (int j = 0; j < cfg.n_numeric; ++j)
    schema.covariates.push_back("x" + std::to_string(j));
  for (int j = 0; j < cfg.n_categorical; ++j) {
    schema.static_covariates.push_back("c" + std::to_string(j));
    schema.categorical.push_back("c" + std::to_string(j));
  }
  return schema;
}

SynthResult generate(const SynthConfig& cfg) {
  validate(cfg);
  const int n = cfg.n_subjects;
  const int pn = cfg.n_numeric;
  const int pc = cfg.n_categorical;
  Rng rng(cfg.seed);

  Eigen::MatrixXd x0(n, pn), slopes(n, pn);
  Eigen::MatrixXi codes(n, pc);
  Eigen::VectorXd eta(n), t_event(n);
  const double code_mean = (cfg.n_categories - 1) / 2.0;
  const double code_sd =
      std::sqrt(((double)cfg.n_categories * cfg.n_categories - 1.0) / 12.0);

  for (int i = 0; i < n; ++i) {
    double e = 0.0;
    for (int j = 0; j < pn; ++j) {
      x0(i, j) = rng.normal();
      e += x0(i, j) * cfg.true_beta[j];
    }
    for (int j = 0; j < pn; ++j) {
      slopes(i, j) = rng.normal();
      e += slopes(i, j) * cfg.slope_beta[j];
    }
    for (int j = 0; j < pc; ++j) {
      codes(i, j) = rng.uniform_int(cfg.n_categories);
      e += (codes(i, j) - code_mean) / code_sd * cfg.true_beta[pn + j];
    }
    eta[i] = e;
    // Inverse-cdf Weibull draw under hazard exp(eta) * h0(t).
    double u = rng.uniform();
    double t = cfg.baseline_hazard_scale *
               std::pow(-std::log(1.0 - u) / std::exp(eta[i]),
                        1.0 / cfg.baseline_hazard_shape);
    t_event[i] = std::max(t, 1e-9);
  }

  Eigen::VectorXd t_censor = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  if (cfg.censor_rate > 0.0) {
    double rho = calibrate_rho(cfg.censor_rate, t_event);
    for (int i = 0; i < n; ++i)
      t_censor[i] = std::max(-std::log(1.0 - rng.uniform()) / rho, 1e-9);
  }

  const int nv = (int)cfg.visit_times.size();
  Eigen::MatrixXd vtime(n, nv);
  for (int i = 0; i < n; ++i) {
    vtime(i, 0) = 0.0;
    for (int k = 1; k < nv; ++k) {
      double t = cfg.visit_times[k];
      if (cfg.visit_jitter_sd > 0.0) t += rng.normal(0.0, cfg.visit_jitter_sd);
      vtime(i, k) = std::max(t, vtime(i, k - 1) + 1e-6);
    }
  }

  std::vector<Eigen::MatrixXd> noise(n);
  for (int i = 0; i < n; ++i) {
    noise[i] = Eigen::MatrixXd::Zero(nv, pn);
    if (cfg.visit_noise_sd > 0.0)
      for (int k = 0; k < nv; ++k)
        for (int j = 0; j < pn; ++j)
          noise[i](k, j) = rng.normal(0.0, cfg.visit_noise_sd);
  }

  SynthResult out;
  CohortSchema schema = synth_schema(cfg);
  out.cohort.covariate_names = schema.covariates;
  out.cohort.covariate_names.insert(out.cohort.covariate_names.end(),
                                    schema.static_covariates.begin(),
                                    schema.static_covariates.end());
  out.cohort.categorical_names = schema.categorical;
  out.cohort.static_names = schema.static_covariates;

  int n_censored = 0;
  out.cohort.subjects.resize(n);
  for (int i = 0; i < n; ++i) {
    SubjectRecord& rec = out.cohort.subjects[i];
    rec.id = "s" + std::to_string(i);
    double observed = std::min(t_event[i], t_censor[i]);
    rec.event = t_event[i] <= t_censor[i] ? 1 : 0;
    rec.event_time_months = observed;
    n_censored += 1 - rec.event;
    for (int k = 0; k < nv; ++k) {
      if (k > 0 && vtime(i, k) >= observed) break;
      Visit v;
      v.time_months = vtime(i, k);
      v.values.resize(pn + pc);
      for (int j = 0; j < pn; ++j)
        v.values[j] = x0(i, j) + slopes(i, j) * v.time_months + noise[i](k, j);
      for (int j = 0; j < pc; ++j) v.values[pn + j] = (double)codes(i, j);
      rec.visits.push_back(std::move(v));
    }
    if (rec.event_time_months <= rec.visits.back().time_months)
      rec.event_time_months = rec.visits.back().time_months + 1e-6;
  }

  if (cfg.missing_rate > 0.0) {
    for (int i = 0; i < n; ++i)
      for (Visit& v : out.cohort.subjects[i].visits)
        for (int j = 0; j < pn + pc; ++j)
          if (rng.uniform() < cfg.missing_rate) v.values[j].reset();
  }

  out.truth.eta = eta;
  out.truth.true_beta = cfg.true_beta;
  out.truth.slope_beta = cfg.slope_beta;
  out.truth.slopes = slopes;
  out.truth.achieved_censoring = (double)n_censored / (double)n;
  out.truth.weibull_scale = cfg.baseline_hazard_scale;
  out.truth.weibull_shape = cfg.baseline_hazard_shape;
  return out;
}

void save_ground_truth(const GroundTruth& truth, const SynthConfig& cfg,
                       const std::string& path) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["n_subjects"] = cfg.n_subjects;
  j["weibull"] = {{"scale", truth.weibull_scale}, {"shape", truth.weibull_shape}};
  j["true_beta"] = truth.true_beta;
  j["slope_beta"] = truth.slope_beta;
  j["achieved_censoring"] = truth.achieved_censoring;
  j["eta"] = std::vector<double>(truth.eta.data(), truth.eta.data() + truth.eta.size());
  std::vector<std::vector<double>> sl(truth.slopes.rows());
  for (int i = 0; i < truth.slopes.rows(); ++i) {
    sl[i].assign(truth.slopes.cols(), 0.0);
    for (int k = 0; k < truth.slopes.cols(); ++k) sl[i][k] = truth.slopes(i, k);
  }
  j["slopes"] = sl;
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot write ground truth file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace survens
