#include "survens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace survens {

bool CohortTable::is_categorical(const std::string& name) const {
  return std::find(categorical_names.begin(), categorical_names.end(), name) !=
         categorical_names.end();
}

bool CohortTable::is_static(const std::string& name) const {
  return is_categorical(name) ||
         std::find(static_names.begin(), static_names.end(), name) != static_names.end();
}

int CohortTable::covariate_index(const std::string& name) const {
  auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  return it == covariate_names.end() ? -1 : static_cast<int>(it - covariate_names.begin());
}

int SurvivalDataset::n_events() const {
  int k = 0;
  for (int e : event) k += e;
  return k;
}

SurvivalDataset SurvivalDataset::subset_rows(const std::vector<int>& idx) const {
  SurvivalDataset out;
  out.feature_names = feature_names;
  out.x.resize(static_cast<int>(idx.size()), x.cols());
  out.time.resize(static_cast<int>(idx.size()));
  out.event.resize(idx.size());
  for (size_t r = 0; r < idx.size(); ++r) {
    out.x.row(static_cast<int>(r)) = x.row(idx[r]);
    out.time[static_cast<int>(r)] = time[idx[r]];
    out.event[r] = event[idx[r]];
  }
  return out;
}

SurvivalDataset SurvivalDataset::subset_cols(const std::vector<int>& cols) const {
  SurvivalDataset out;
  out.time = time;
  out.event = event;
  out.x.resize(x.rows(), static_cast<int>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) {
    out.x.col(static_cast<int>(c)) = x.col(cols[c]);
    out.feature_names.push_back(feature_names[cols[c]]);
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& cell, const std::string& column, size_t line_no) {
  double v;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw MalformedRow("line " + std::to_string(line_no) + ": non-numeric value '" + cell +
                       "' in column '" + column + "'");
  return v;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CohortTable load_cohort(const std::string& path, const CohortSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cohort file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw MalformedRow("empty file: " + path);
  std::vector<std::string> cols = split_line(header);

  auto col_of = [&](const std::string& name) {
    auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw MalformedRow("header missing column '" + name + "'");
    return static_cast<int>(it - cols.begin());
  };

  CohortTable table;
  table.covariate_names = schema.covariates;
  for (const auto& s : schema.static_covariates) table.covariate_names.push_back(s);
  // categorical is a flag over declared columns, not an extra column list
  for (const auto& s : schema.categorical)
    if (std::find(table.covariate_names.begin(), table.covariate_names.end(), s) ==
        table.covariate_names.end())
      table.covariate_names.push_back(s);
  table.static_names = schema.static_covariates;
  table.categorical_names = schema.categorical;

  int id_ix = col_of(schema.id_column);
  int time_ix = col_of(schema.visit_time_column);
  int etime_ix = col_of(schema.event_time_column);
  int event_ix = col_of(schema.event_column);
  std::vector<int> cov_ix;
  for (const auto& name : table.covariate_names) cov_ix.push_back(col_of(name));

  std::map<std::string, int> subject_of;  // id -> index into subjects
  std::string line;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != cols.size())
      throw MalformedRow("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(cols.size()) + " cells, got " +
                         std::to_string(cells.size()));

    const std::string& id = cells[id_ix];
    if (id.empty()) throw MalformedRow("line " + std::to_string(line_no) + ": empty id");
    if (cells[etime_ix].empty() || cells[event_ix].empty())
      throw MissingOutcome("line " + std::to_string(line_no) + ": subject '" + id +
                           "' has missing outcome");

    Visit visit;
    visit.time_months = parse_number(cells[time_ix], schema.visit_time_column, line_no);
    if (visit.time_months < 0)
      throw MalformedRow("line " + std::to_string(line_no) + ": negative visit time");
    for (int ix : cov_ix) {
      if (cells[ix].empty())
        visit.values.push_back(std::nullopt);
      else
        visit.values.push_back(parse_number(cells[ix], cols[ix], line_no));
    }
    double event_time = parse_number(cells[etime_ix], schema.event_time_column, line_no);
    double event_raw = parse_number(cells[event_ix], schema.event_column, line_no);
    if (event_raw != 0.0 && event_raw != 1.0)
      throw MalformedRow("line " + std::to_string(line_no) + ": event must be 0 or 1");
    if (event_time <= 0)
      throw MissingOutcome("line " + std::to_string(line_no) + ": event_time must be positive");

    auto [it, inserted] = subject_of.emplace(id, static_cast<int>(table.subjects.size()));
    if (inserted) {
      SubjectRecord rec;
      rec.id = id;
      rec.event_time_months = event_time;
      rec.event = event_raw != 0.0;
      table.subjects.push_back(std::move(rec));
    }
    SubjectRecord& rec = table.subjects[it->second];
    if (rec.event_time_months != event_time || rec.event != (event_raw != 0.0))
      throw MalformedRow("line " + std::to_string(line_no) + ": subject '" + id +
                         "' has inconsistent outcome across rows");
    for (const Visit& v : rec.visits)
      if (v.time_months == visit.time_months)
        throw DuplicateVisit("subject '" + id + "' has two visits at time " +
                             format_number(visit.time_months));
    rec.visits.push_back(std::move(visit));
  }

  for (SubjectRecord& rec : table.subjects) {
    std::sort(rec.visits.begin(), rec.visits.end(),
              [](const Visit& a, const Visit& b) { return a.time_months < b.time_months; });
    if (rec.visits.empty() || rec.visits.front().time_months != 0.0)
      throw MalformedRow("subject '" + rec.id + "' has no baseline visit at time 0");
    if (rec.event_time_months < rec.visits.back().time_months)
      throw MalformedRow("subject '" + rec.id + "' has a visit after its event time");
  }
  return table;
}

void save_cohort(const CohortTable& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cohort file: " + path);
  out << "id,time";
  for (const auto& name : c.covariate_names) out << ',' << name;
  out << ",event_time,event\n";
  for (const SubjectRecord& rec : c.subjects) {
    for (const Visit& v : rec.visits) {
      out << rec.id << ',' << format_number(v.time_months);
      for (const auto& cell : v.values) {
        out << ',';
        if (cell) out << format_number(*cell);
      }
      out << ',' << format_number(rec.event_time_months) << ',' << (rec.event ? 1 : 0) << '\n';
    }
  }
}

CohortTable truncate_visits(const CohortTable& c, int max_visits) {
  if (max_visits < 1) throw Error("max_visits must be >= 1");
  CohortTable out = c;
  for (SubjectRecord& rec : out.subjects)
    if (static_cast<int>(rec.visits.size()) > max_visits) rec.visits.resize(max_visits);
  return out;
}

namespace {
bool close(double a, double b, double rel_tol) {
  if (a == b) return true;
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}
}  // namespace

bool cohorts_equal(const CohortTable& a, const CohortTable& b, double rel_tol) {
  if (a.covariate_names != b.covariate_names || a.categorical_names != b.categorical_names ||
      a.static_names != b.static_names || a.subjects.size() != b.subjects.size())
    return false;
  for (size_t s = 0; s < a.subjects.size(); ++s) {
    const auto& x = a.subjects[s];
    const auto& y = b.subjects[s];
    if (x.id != y.id || x.event != y.event ||
        !close(x.event_time_months, y.event_time_months, rel_tol) ||
        x.visits.size() != y.visits.size())
      return false;
    for (size_t v = 0; v < x.visits.size(); ++v) {
      if (!close(x.visits[v].time_months, y.visits[v].time_months, rel_tol)) return false;
      if (x.visits[v].values.size() != y.visits[v].values.size()) return false;
      for (size_t k = 0; k < x.visits[v].values.size(); ++k) {
        const auto& va = x.visits[v].values[k];
        const auto& vb = y.visits[v].values[k];
        if (va.has_value() != vb.has_value()) return false;
        if (va && !close(*va, *vb, rel_tol)) return false;
      }
    }
  }
  return true;
}

}  // namespace survens
