#include <doctest.h>

#include <cmath>

#include "survens/errors.hpp"
#include "survens/features.hpp"

using namespace survens;

namespace {

// Two longitudinal covariates, one static numeric, one categorical with
// observed levels {1, 3, 4}.
CohortTable toy_cohort() {
  CohortTable c;
  c.covariate_names = {"adas", "mmse", "age", "apoe"};
  c.static_names = {"age", "apoe"};
  c.categorical_names = {"apoe"};

  auto subject = [&](const std::string& id, double et, bool ev,
                     std::vector<Visit> visits) {
    SubjectRecord r;
    r.id = id;
    r.event_time_months = et;
    r.event = ev;
    r.visits = std::move(visits);
    return r;
  };
  auto visit = [](double t, std::vector<std::optional<double>> vals) {
    Visit v;
    v.time_months = t;
    v.values = std::move(vals);
    return v;
  };

  c.subjects.push_back(subject("a", 30, true,
                               {visit(0, {10.0, 28.0, 71.0, 3.0}),
                                visit(6, {13.0, 27.0, 71.0, 3.0}),
                                visit(12, {19.0, 25.0, 71.0, 3.0})}));
  c.subjects.push_back(subject("b", 24, false,
                               {visit(0, {8.0, 29.0, 65.0, 1.0}),
                                visit(5, {8.0, std::nullopt, 65.0, 1.0})}));
  c.subjects.push_back(subject("c", 18, true,
                               {visit(0, {12.0, std::nullopt, 80.0, 4.0})}));
  return c;
}

}  // namespace

TEST_CASE("scenario names round-trip") {
  for (Scenario s : {Scenario::BaselineOnly, Scenario::TwoVisits, Scenario::ThreeVisits})
    CHECK(scenario_from_name(scenario_name(s)) == s);
  CHECK(scenario_name(Scenario::TwoVisits) == "two_visits");
  CHECK_THROWS_AS(scenario_from_name("weekly"), InvalidConfig);
}

TEST_CASE("baseline design lays out numerics, statics, then dummies") {
  DesignBuild d = build_design(toy_cohort(), Scenario::BaselineOnly);
  CHECK(d.data.feature_names ==
        std::vector<std::string>{"adas", "mmse", "age", "apoe_3", "apoe_4"});
  CHECK(d.data.n() == 3);
  CHECK(d.data.time[0] == 30.0);
  CHECK(d.data.event == std::vector<int>{1, 0, 1});
  // Subject a: level 3 -> apoe_3 = 1, apoe_4 = 0.
  CHECK(d.data.x(0, 3) == 1.0);
  CHECK(d.data.x(0, 4) == 0.0);
  // Subject b: reference level 1 -> both dummies zero.
  CHECK(d.data.x(1, 3) == 0.0);
  CHECK(d.data.x(1, 4) == 0.0);
  // Subject c: level 4.
  CHECK(d.data.x(2, 3) == 0.0);
  CHECK(d.data.x(2, 4) == 1.0);
  CHECK(d.is_onehot == std::vector<std::uint8_t>{0, 0, 0, 1, 1});
  CHECK(std::isnan(d.data.x(2, 1)));
  CHECK(d.data.x(0, 0) == 10.0);
  CHECK(d.data.x(1, 2) == 65.0);
}

TEST_CASE("delta columns are per-month rates from actual visit times") {
  DesignBuild d = build_design(toy_cohort(), Scenario::ThreeVisits);
  CHECK(d.data.feature_names ==
        std::vector<std::string>{"adas", "mmse", "age", "apoe_3", "apoe_4",
                                 "adas_d01", "mmse_d01", "adas_d12", "mmse_d12"});
  // Subject a: (13-10)/6 and (19-13)/6; mmse (27-28)/6 and (25-27)/6.
  CHECK(d.data.x(0, 5) == doctest::Approx(0.5));
  CHECK(d.data.x(0, 6) == doctest::Approx(-1.0 / 6.0));
  CHECK(d.data.x(0, 7) == doctest::Approx(1.0));
  CHECK(d.data.x(0, 8) == doctest::Approx(-1.0 / 3.0));
  // Subject b: adas (8-8)/5 = 0; mmse missing at visit 1 -> NaN; no visit 2.
  CHECK(d.data.x(1, 5) == doctest::Approx(0.0));
  CHECK(std::isnan(d.data.x(1, 6)));
  CHECK(std::isnan(d.data.x(1, 7)));
  CHECK(std::isnan(d.data.x(1, 8)));
  // Subject c has only a baseline visit.
  CHECK(std::isnan(d.data.x(2, 5)));
  CHECK(d.zero_interval_count == 0);
  // Static covariates never get deltas and one-hot flags stay aligned.
  CHECK(d.is_onehot ==
        std::vector<std::uint8_t>{0, 0, 0, 1, 1, 0, 0, 0, 0});
}

TEST_CASE("two-visit scenario stops at the first delta block") {
  DesignBuild d = build_design(toy_cohort(), Scenario::TwoVisits);
  CHECK(d.data.feature_names ==
        std::vector<std::string>{"adas", "mmse", "age", "apoe_3", "apoe_4",
                                 "adas_d01", "mmse_d01"});
}

TEST_CASE("near-coincident visits are counted, not divided") {
  CohortTable c = toy_cohort();
  c.subjects[0].visits[1].time_months = 1e-12;
  DesignBuild d = build_design(c, Scenario::TwoVisits);
  CHECK(d.zero_interval_count == 2);
  CHECK(std::isnan(d.data.x(0, 5)));
  CHECK(std::isnan(d.data.x(0, 6)));
}

TEST_CASE("non-integer categorical codes are rejected") {
  CohortTable c = toy_cohort();
  c.subjects[1].visits[0].values[3] = 1.5;
  CHECK_THROWS_AS(build_design(c, Scenario::BaselineOnly), MalformedRow);
  c.subjects[1].visits[0].values[3] = -1.0;
  CHECK_THROWS_AS(build_design(c, Scenario::BaselineOnly), MalformedRow);
}

TEST_CASE("standardizer centers and scales with the n-1 convention") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5,
       2, 5,
       3, 5,
       6, 5;
  Standardizer s = fit_standardizer(x, {0, 0});
  CHECK(s.mean[0] == doctest::Approx(3.0));
  double sd = std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 3.0);
  CHECK(s.scale[0] == doctest::Approx(sd));
  CHECK(s.is_constant[0] == 0);
  // Constant column: centered, unit scale, flagged.
  CHECK(s.mean[1] == doctest::Approx(5.0));
  CHECK(s.scale[1] == 1.0);
  CHECK(s.is_constant[1] == 1);
  Eigen::MatrixXd z = apply_standardizer(s, x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(std::sqrt(z.col(0).squaredNorm() / 3.0) == doctest::Approx(1.0));
  CHECK(z.col(1).isZero(1e-12));
}

TEST_CASE("one-hot columns pass through untouched") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0,
       4, 1,
       7, 1;
  Standardizer s = fit_standardizer(x, {0, 1});
  Eigen::MatrixXd z = apply_standardizer(s, x);
  CHECK(z.col(1) == x.col(1));
  CHECK(z(2, 0) == doctest::Approx((7.0 - 4.0) / 3.0));
}

TEST_CASE("standardizer enforces matching shapes") {
  Eigen::MatrixXd x(3, 2);
  x.setRandom();
  CHECK_THROWS_AS(fit_standardizer(x, {0}), LengthMismatch);
  Standardizer s = fit_standardizer(x, {0, 0});
  Eigen::MatrixXd wrong(3, 3);
  wrong.setRandom();
  CHECK_THROWS_AS(apply_standardizer(s, wrong), FeatureMismatch);
}
