#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survens/errors.hpp"
#include "survens/metrics.hpp"
#include "survens/rng.hpp"

using namespace survens;

namespace {

struct Sample {
  Eigen::VectorXd scores, time;
  std::vector<int> event;
};

Sample random_sample(int n, uint64_t seed, double event_frac, bool ties) {
  Rng rng(seed);
  Sample s;
  s.scores.resize(n);
  s.time.resize(n);
  s.event.resize(n);
  for (int i = 0; i < n; ++i) {
    s.scores[i] = rng.normal();
    s.time[i] = ties ? (double)(1 + rng.uniform_int(6)) : 1.0 + 20.0 * rng.uniform();
    s.event[i] = rng.uniform() < event_frac ? 1 : 0;
  }
  s.event[0] = 1;
  return s;
}

}  // namespace

TEST_CASE("Kaplan-Meier matches hand products") {
  Eigen::VectorXd time(5);
  time << 1, 2, 3, 4, 5;
  std::vector<int> event = {1, 0, 1, 0, 1};
  KmCurve km = kaplan_meier(time, event);
  // S(1) = 4/5, S(3) = 4/5 * 2/3, S(5) = 0.
  CHECK(km.at(0.5) == doctest::Approx(1.0));
  CHECK(km.at(1.0) == doctest::Approx(0.8));
  CHECK(km.at(2.5) == doctest::Approx(0.8));
  CHECK(km.at(3.0) == doctest::Approx(0.8 * 2.0 / 3.0));
  CHECK(km.at(5.0) == doctest::Approx(0.0));
  CHECK(km.at_left(1.0) == doctest::Approx(1.0));
  CHECK(km.at_left(3.0) == doctest::Approx(0.8));
}

TEST_CASE("Kaplan-Meier agrees with the product-limit oracle") {
  Sample s = random_sample(60, 3, 0.6, true);
  KmCurve km = kaplan_meier(s.time, s.event);
  for (double t : {0.5, 1.0, 2.0, 3.5, 6.0, 10.0})
    CHECK(km.at(t) == doctest::Approx(oracle::km_at(s.time, s.event, t)).epsilon(1e-12));
}

TEST_CASE("censoring KM flips the event flag") {
  Sample s = random_sample(60, 4, 0.6, true);
  std::vector<int> flipped(s.event.size());
  for (size_t i = 0; i < s.event.size(); ++i) flipped[i] = 1 - s.event[i];
  KmCurve g = censoring_km(s.time, s.event);
  for (double t : {1.0, 2.0, 4.0, 6.0})
    CHECK(g.at(t) == doctest::Approx(oracle::km_at(s.time, flipped, t)).epsilon(1e-12));
}

TEST_CASE("concordance matches the pair-loop oracle") {
  for (uint64_t seed : {10u, 11u, 12u}) {
    Sample s = random_sample(50, seed, 0.5, seed == 12u);
    CHECK(c_index(s.scores, s.time, s.event) ==
          doctest::Approx(oracle::c_index(s.scores, s.time, s.event)).epsilon(1e-12));
  }
}

TEST_CASE("concordance handles the canonical small cases") {
  Eigen::VectorXd time(3);
  time << 1, 2, 3;
  std::vector<int> event = {1, 1, 1};
  Eigen::VectorXd perfect(3);
  perfect << 3, 2, 1;
  CHECK(c_index(perfect, time, event) == doctest::Approx(1.0));
  Eigen::VectorXd inverted(3);
  inverted << 1, 2, 3;
  CHECK(c_index(inverted, time, event) == doctest::Approx(0.0));
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(3);
  CHECK(c_index(flat, time, event) == doctest::Approx(0.5));
  // Tied time: event vs censored is comparable, event vs event is not.
  Eigen::VectorXd t2(2);
  t2 << 5, 5;
  Eigen::VectorXd s2(2);
  s2 << 2, 1;
  CHECK(c_index(s2, t2, {1, 0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(c_index(s2, t2, {1, 1}), NoComparablePairs);
  CHECK_THROWS_AS(c_index(s2, t2, {0, 0}), NoComparablePairs);
}

TEST_CASE("AUC matches the unweighted oracle when nothing is censored") {
  Sample s = random_sample(80, 21, 1.0, false);
  std::vector<int> all_events(80, 1);
  AucCurve curve = auc_curve(s.scores, s.time, all_events, 40);
  int compared = 0;
  for (int k = 0; k < curve.grid.size(); ++k) {
    if (!curve.defined[k]) continue;
    double expect = oracle::auc_at(s.scores, s.time, all_events, curve.grid[k]);
    CHECK(curve.auc[k] == doctest::Approx(expect).epsilon(1e-10));
    ++compared;
  }
  CHECK(compared > 20);
  CHECK(curve.iauc_defined);
  CHECK(curve.iauc > 0.0);
  CHECK(curve.iauc < 1.0);
}

TEST_CASE("informative scores push AUC and iAUC above one half") {
  Rng rng(31);
  int n = 150;
  Eigen::VectorXd risk(n), time(n);
  std::vector<int> event(n, 1);
  for (int i = 0; i < n; ++i) {
    risk[i] = rng.normal();
    time[i] = -std::log(1.0 - rng.uniform()) / std::exp(risk[i]);
  }
  AucCurve curve = auc_curve(risk, time, event);
  CHECK(curve.iauc_defined);
  CHECK(curve.iauc > 0.65);
  AucCurve anti = auc_curve((-risk).eval(), time, event);
  CHECK(anti.iauc < 0.35);
}

TEST_CASE("grid endpoints with empty case or control sets are flagged") {
  Eigen::VectorXd time(4);
  time << 2, 4, 6, 8;
  std::vector<int> event = {0, 1, 1, 0};
  Eigen::VectorXd scores(4);
  scores << 0.1, 0.9, 0.5, 0.2;
  AucCurve curve = auc_curve(scores, time, event, 50);
  CHECK(curve.grid[0] == doctest::Approx(2.0));
  CHECK(curve.grid[curve.grid.size() - 1] == doctest::Approx(8.0));
  // Before the first event there are no cases; at the last time no controls.
  CHECK_FALSE(curve.defined.front());
  CHECK_FALSE(curve.defined.back());
  bool any_defined = false;
  for (auto d : curve.defined) any_defined |= d != 0;
  CHECK(any_defined);
  CHECK(curve.iauc_defined);
}

TEST_CASE("a fully censored tail leaves iAUC undefined") {
  Eigen::VectorXd time(3);
  time << 1, 2, 3;
  std::vector<int> event = {0, 0, 0};
  Eigen::VectorXd scores(3);
  scores << 1, 2, 3;
  AucCurve curve = auc_curve(scores, time, event);
  CHECK_FALSE(curve.iauc_defined);
  for (auto d : curve.defined) CHECK_FALSE(d);
}

TEST_CASE("IPCW weights recover concordance under independent censoring") {
  // With heavy early censoring the weighted AUC should still sit clearly
  // above one half for an informative score.
  Rng rng(77);
  int n = 400;
  Eigen::VectorXd risk(n), time(n);
  std::vector<int> event(n);
  for (int i = 0; i < n; ++i) {
    risk[i] = rng.normal();
    double t = -std::log(1.0 - rng.uniform()) / std::exp(risk[i]);
    double c = -std::log(1.0 - rng.uniform()) / 0.5;
    event[i] = t <= c ? 1 : 0;
    time[i] = std::min(t, c);
  }
  AucCurve curve = auc_curve(risk, time, event);
  CHECK(curve.iauc_defined);
  CHECK(curve.iauc > 0.6);
}

TEST_CASE("permutation importance ranks the informative feature first") {
  Rng rng(5);
  int n = 250;
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd time(n);
  std::vector<int> event(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    double eta = 2.0 * x(i, 0);
    time[i] = -std::log(1.0 - rng.uniform()) / std::exp(eta);
  }
  ScoreFn fn = [](const Eigen::MatrixXd& m) {
    return Eigen::VectorXd(2.0 * m.col(0));
  };
  ImportanceReport rep = permutation_importance(fn, x, time, event,
                                                {"signal", "noise_a", "noise_b"},
                                                5, 99);
  CHECK(rep.names[0] == "signal");
  CHECK(rep.baseline_cindex > 0.7);
  CHECK(rep.importance[0] > 0.1);
  CHECK(std::abs(rep.importance[1]) < 0.05);
  CHECK(std::abs(rep.importance[2]) < 0.05);
  ImportanceReport rep2 = permutation_importance(fn, x, time, event,
                                                 {"signal", "noise_a", "noise_b"},
                                                 5, 99);
  CHECK(rep.importance == rep2.importance);
}
