#include "survens/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "survens/errors.hpp"

namespace survens {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinInterval = 1e-9;

double baseline_value(const SubjectRecord& rec, int cov) {
  const auto& v = rec.visits.front().values;
  return v[cov].has_value() ? *v[cov] : kNan;
}

// Per-month change between recorded visits a and b; NaN when either side
// is absent. Counts the pair as a zero interval when the gap is too small.
double delta_value(const SubjectRecord& rec, int cov, int a, int b,
                   int* zero_intervals) {
  if ((int)rec.visits.size() <= b) return kNan;
  const auto& va = rec.visits[a].values[cov];
  const auto& vb = rec.visits[b].values[cov];
  if (!va.has_value() || !vb.has_value()) return kNan;
  double dt = rec.visits[b].time_months - rec.visits[a].time_months;
  if (dt < kMinInterval) {
    ++(*zero_intervals);
    return kNan;
  }
  return (*vb - *va) / dt;
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::BaselineOnly: return "baseline";
    case Scenario::TwoVisits: return "two_visits";
    case Scenario::ThreeVisits: return "three_visits";
  }
  throw InvalidConfig("unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "baseline") return Scenario::BaselineOnly;
  if (name == "two_visits") return Scenario::TwoVisits;
  if (name == "three_visits") return Scenario::ThreeVisits;
  throw InvalidConfig("unknown scenario '" + name + "'");
}

DesignBuild build_design(const CohortTable& cohort, Scenario scenario) {
  const int n = (int)cohort.subjects.size();
  if (n == 0) throw InvalidConfig("cohort has no subjects");

  std::vector<std::string> longitudinal, static_numeric;
  for (const auto& name : cohort.covariate_names) {
    if (cohort.is_categorical(name)) continue;
    (cohort.is_static(name) ? static_numeric : longitudinal).push_back(name);
  }

  // Observed level sets decide how many dummies each categorical needs;
  // the smallest level is the reference.
  std::vector<std::vector<int>> cat_levels;
  for (const auto& name : cohort.categorical_names) {
    int cov = cohort.covariate_index(name);
    std::set<int> levels;
    for (const auto& rec : cohort.subjects)
      for (const auto& visit : rec.visits) {
        const auto& v = visit.values[cov];
        if (!v.has_value()) continue;
        double code = *v;
        if (code < 0.0 || code != std::floor(code))
          throw MalformedRow("categorical '" + name +
                             "' has non-integer code " + std::to_string(code));
        levels.insert((int)code);
      }
    cat_levels.emplace_back(levels.begin(), levels.end());
  }

  DesignBuild out;
  auto& names = out.data.feature_names;
  for (const auto& name : longitudinal) names.push_back(name);
  for (const auto& name : static_numeric) names.push_back(name);
  for (size_t c = 0; c < cohort.categorical_names.size(); ++c)
    for (size_t l = 1; l < cat_levels[c].size(); ++l)
      names.push_back(cohort.categorical_names[c] + "_" +
                      std::to_string(cat_levels[c][l]));
  if (scenario != Scenario::BaselineOnly)
    for (const auto& name : longitudinal) names.push_back(name + "_d01");
  if (scenario == Scenario::ThreeVisits)
    for (const auto& name : longitudinal) names.push_back(name + "_d12");

  const int p = (int)names.size();
  out.data.x.resize(n, p);
  out.data.time.resize(n);
  out.data.event.resize(n);
  out.is_onehot.assign(p, 0);
  {
    int col = (int)longitudinal.size() + (int)static_numeric.size();
    for (size_t c = 0; c < cohort.categorical_names.size(); ++c)
      for (size_t l = 1; l < cat_levels[c].size(); ++l) out.is_onehot[col++] = 1;
  }

  for (int i = 0; i < n; ++i) {
    const SubjectRecord& rec = cohort.subjects[i];
    out.data.time[i] = rec.event_time_months;
    out.data.event[i] = rec.event;
    int col = 0;
    for (const auto& name : longitudinal)
      out.data.x(i, col++) = baseline_value(rec, cohort.covariate_index(name));
    for (const auto& name : static_numeric)
      out.data.x(i, col++) = baseline_value(rec, cohort.covariate_index(name));
    for (size_t c = 0; c < cohort.categorical_names.size(); ++c) {
      double code = baseline_value(rec, cohort.covariate_index(cohort.categorical_names[c]));
      for (size_t l = 1; l < cat_levels[c].size(); ++l) {
        out.data.x(i, col++) = std::isnan(code)
                                   ? kNan
                                   : (double)((int)code == cat_levels[c][l]);
      }
    }
    if (scenario != Scenario::BaselineOnly)
      for (const auto& name : longitudinal)
        out.data.x(i, col++) = delta_value(rec, cohort.covariate_index(name), 0, 1,
                                           &out.zero_interval_count);
    if (scenario == Scenario::ThreeVisits)
      for (const auto& name : longitudinal)
        out.data.x(i, col++) = delta_value(rec, cohort.covariate_index(name), 1, 2,
                                           &out.zero_interval_count);
  }
  return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& x_train,
                              const std::vector<std::uint8_t>& is_onehot) {
  const int n = (int)x_train.rows(), p = (int)x_train.cols();
  if ((int)is_onehot.size() != p)
    throw LengthMismatch("is_onehot must match column count");
  if (n < 1) throw InvalidConfig("empty training matrix");
  Standardizer s;
  s.mean.setZero(p);
  s.scale.setOnes(p);
  s.is_onehot = is_onehot;
  s.is_constant.assign(p, 0);
  for (int j = 0; j < p; ++j) {
    if (is_onehot[j]) continue;
    s.mean[j] = x_train.col(j).mean();
    double ss = (x_train.col(j).array() - s.mean[j]).square().sum();
    double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    if (sd > 0.0) s.scale[j] = sd;
    else s.is_constant[j] = 1;
  }
  return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s,
                                   const Eigen::MatrixXd& x) {
  if ((int)x.cols() != s.mean.size())
    throw FeatureMismatch("column count does not match standardizer");
  Eigen::MatrixXd out = x;
  for (int j = 0; j < x.cols(); ++j) {
    if (s.is_onehot[j]) continue;
    out.col(j) = (x.col(j).array() - s.mean[j]) / s.scale[j];
  }
  return out;
}

}  // namespace survens
