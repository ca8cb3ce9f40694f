#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "survens/dataset.hpp"
#include "survens/errors.hpp"

using namespace survens;
namespace fs = std::filesystem;

namespace {

std::string temp_csv(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

CohortSchema two_cov_schema() {
  CohortSchema s;
  s.covariates = {"adas", "mmse"};
  return s;
}

const char* kGood =
    "id,time,adas,mmse,event_time,event\n"
    "s1,0,10.5,28,24,1\n"
    "s1,6,12.25,27,24,1\n"
    "s2,0,8,,36,0\n"
    "s2,6.5,9,29,36,0\n"
    "s2,13,10,28,36,0\n";

}  // namespace

TEST_CASE("load parses subjects, visits, and missing cells") {
  CohortTable c = load_cohort(temp_csv("ds_good.csv", kGood), two_cov_schema());
  REQUIRE(c.subjects.size() == 2);
  const SubjectRecord& s1 = c.subjects[0];
  CHECK(s1.id == "s1");
  CHECK(s1.visits.size() == 2);
  CHECK(s1.event);
  CHECK(s1.event_time_months == 24.0);
  CHECK(*s1.visits[1].values[0] == doctest::Approx(12.25));
  const SubjectRecord& s2 = c.subjects[1];
  CHECK_FALSE(s2.event);
  CHECK(s2.visits.size() == 3);
  CHECK_FALSE(s2.visits[0].values[1].has_value());
  CHECK(*s2.visits[2].values[0] == doctest::Approx(10.0));
}

TEST_CASE("save then load round-trips exactly") {
  CohortTable c = load_cohort(temp_csv("ds_rt1.csv", kGood), two_cov_schema());
  fs::path p = fs::temp_directory_path() / "ds_rt2.csv";
  save_cohort(c, p.string());
  CohortTable c2 = load_cohort(p.string(), two_cov_schema());
  CHECK(cohorts_equal(c, c2));
}

TEST_CASE("missing header column is rejected") {
  std::string path = temp_csv("ds_nohdr.csv", "id,time,adas,event_time,event\n");
  CHECK_THROWS_AS(load_cohort(path, two_cov_schema()), MalformedRow);
}

TEST_CASE("wrong cell count is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10.5,28,24\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_cells.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("unparseable number is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,ten,28,24,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_num.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("duplicate visit time is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,24,1\n"
      "s1,0,11,27,24,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_dup.csv", body), two_cov_schema()),
                  DuplicateVisit);
}

TEST_CASE("empty outcome cells are rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_miss.csv", body), two_cov_schema()),
                  MissingOutcome);
}

TEST_CASE("nonpositive event time is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,0,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_et.csv", body), two_cov_schema()),
                  MissingOutcome);
}

TEST_CASE("event flag outside 0/1 is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,24,2\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_ev.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("inconsistent outcomes across rows are rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,24,1\n"
      "s1,6,11,27,30,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_inc.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("subject without baseline visit is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,6,10,28,24,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_base.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("visit after the event time is rejected") {
  std::string body =
      "id,time,adas,mmse,event_time,event\n"
      "s1,0,10,28,24,1\n"
      "s1,25,11,27,24,1\n";
  CHECK_THROWS_AS(load_cohort(temp_csv("ds_late.csv", body), two_cov_schema()),
                  MalformedRow);
}

TEST_CASE("truncate_visits keeps the leading visits") {
  CohortTable c = load_cohort(temp_csv("ds_tr.csv", kGood), two_cov_schema());
  CohortTable t = truncate_visits(c, 1);
  for (const auto& rec : t.subjects) CHECK(rec.visits.size() == 1);
  CHECK(t.subjects[1].visits[0].time_months == 0.0);
  CHECK_THROWS_AS(truncate_visits(c, 0), Error);
  CHECK(cohorts_equal(truncate_visits(c, 99), c));
}

TEST_CASE("cohorts_equal spots value and shape drift") {
  CohortTable a = load_cohort(temp_csv("ds_eq.csv", kGood), two_cov_schema());
  CohortTable b = a;
  CHECK(cohorts_equal(a, b));
  b.subjects[0].visits[0].values[0] = 10.5000001;
  CHECK_FALSE(cohorts_equal(a, b));
  b = a;
  b.subjects.pop_back();
  CHECK_FALSE(cohorts_equal(a, b));
}

TEST_CASE("survival dataset helpers subset consistently") {
  SurvivalDataset d;
  d.x.resize(3, 2);
  d.x << 1, 2, 3, 4, 5, 6;
  d.feature_names = {"a", "b"};
  d.time.resize(3);
  d.time << 10, 20, 30;
  d.event = {1, 0, 1};
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.n_events() == 2);
  CHECK_FALSE(d.has_missing());
  SurvivalDataset r = d.subset_rows({2, 0});
  CHECK(r.x(0, 1) == 6);
  CHECK(r.time[1] == 10);
  CHECK(r.event[0] == 1);
  SurvivalDataset c = d.subset_cols({1});
  CHECK(c.feature_names == std::vector<std::string>{"b"});
  CHECK(c.x(2, 0) == 6);
}
