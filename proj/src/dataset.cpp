#include "contsurv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"

namespace contsurv {

std::size_t Dataset::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const SubjectRecord& r) { return r.status == 1; }));
}

std::vector<double> Dataset::times() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.time);
  return out;
}

std::vector<int> Dataset::statuses() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.status);
  return out;
}

std::vector<double> Dataset::exposures() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.exposure);
  return out;
}

std::vector<double> Dataset::variable(const std::string& name) const {
  if (name == exposure_name) return exposures();
  auto it = std::find(confounder_names.begin(), confounder_names.end(), name);
  if (it == confounder_names.end()) throw Error(ErrorKind::MissingColumn, name);
  auto j = static_cast<std::size_t>(it - confounder_names.begin());
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.confounders.at(j));
  return out;
}

double Dataset::min_exposure() const {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records");
  double m = records.front().exposure;
  for (const auto& r : records) m = std::min(m, r.exposure);
  return m;
}

double Dataset::max_exposure() const {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records");
  double m = records.front().exposure;
  for (const auto& r : records) m = std::max(m, r.exposure);
  return m;
}

std::vector<double> Dataset::event_times() const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.status == 1) out.push_back(r.time);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.exposure_name = exposure_name;
  out.confounder_names = confounder_names;
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(records.at(i));
  return out;
}

std::string Violation::describe() const {
  std::string what;
  switch (kind) {
    case ViolationKind::TooFewRecords: what = "TooFewRecords"; break;
    case ViolationKind::AllCensored: what = "AllCensored"; break;
    case ViolationKind::NonPositiveTime: what = "NonPositiveTime"; break;
    case ViolationKind::InvalidStatus: what = "InvalidStatus"; break;
    case ViolationKind::NonFinite: what = "NonFinite"; break;
    case ViolationKind::ArityMismatch: what = "ArityMismatch"; break;
    case ViolationKind::ConstantExposure: what = "ConstantExposure"; break;
  }
  if (row) what += fmt::format(" (row {})", *row);
  if (!field.empty()) what += fmt::format(" [{}]", field);
  return what;
}

namespace {

double parse_field(const std::vector<std::string>& row, std::size_t col, std::size_t line,
                   const std::string& name) {
  if (col >= row.size()) {
    throw Error(ErrorKind::ParseError, fmt::format("row {} column {}: missing value", line, name));
  }
  auto v = csv::parse_double(row[col]);
  if (!v) {
    throw Error(ErrorKind::ParseError,
                fmt::format("row {} column {}: cannot parse '{}'", line, name, row[col]));
  }
  if (!std::isfinite(*v)) {
    throw Error(ErrorKind::ParseError, fmt::format("row {} column {}: non-finite value", line, name));
  }
  return *v;
}

}  // namespace

Dataset read_csv(std::istream& in, const Schema& schema) {
  if (schema.exposure.empty()) throw Error(ErrorKind::InvalidArgument, "schema has no exposure column");
  auto table = csv::read(in);
  const auto time_col = table.require_column(schema.time);
  const auto status_col = table.require_column(schema.status);
  const auto exposure_col = table.require_column(schema.exposure);
  std::vector<std::size_t> conf_cols;
  for (const auto& name : schema.confounders) conf_cols.push_back(table.require_column(name));
  if (table.rows.empty()) throw Error(ErrorKind::EmptyDataset, "no data rows");

  Dataset d;
  d.exposure_name = schema.exposure;
  d.confounder_names = schema.confounders;
  d.records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    SubjectRecord r;
    r.time = parse_field(row, time_col, i, schema.time);
    if (r.time <= 0.0) {
      throw Error(ErrorKind::ParseError, fmt::format("row {} column {}: time must be > 0", i, schema.time));
    }
    if (status_col >= row.size() || (row[status_col] != "0" && row[status_col] != "1")) {
      throw Error(ErrorKind::ParseError,
                  fmt::format("row {} column {}: status must be 0 or 1", i, schema.status));
    }
    r.status = row[status_col] == "1" ? 1 : 0;
    r.exposure = parse_field(row, exposure_col, i, schema.exposure);
    for (std::size_t j = 0; j < conf_cols.size(); ++j) {
      r.confounders.push_back(parse_field(row, conf_cols[j], i, schema.confounders[j]));
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return read_csv(in, schema);
}

void write_csv(const Dataset& d, std::ostream& out) {
  out << "time,status," << d.exposure_name;
  for (const auto& name : d.confounder_names) out << ',' << name;
  out << '\n';
  for (const auto& r : d.records) {
    out << csv::format_double(r.time) << ',' << r.status << ',' << csv::format_double(r.exposure);
    for (double c : r.confounders) out << ',' << csv::format_double(c);
    out << '\n';
  }
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_csv(d, out);
}

std::vector<Violation> validate(const Dataset& d) {
  std::vector<Violation> out;
  if (d.n() < 2) out.push_back({ViolationKind::TooFewRecords, std::nullopt, ""});
  bool any_event = false;
  std::set<double> distinct_exposure;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (!std::isfinite(r.time)) {
      out.push_back({ViolationKind::NonFinite, i, "time"});
    } else if (r.time <= 0.0) {
      out.push_back({ViolationKind::NonPositiveTime, i, "time"});
    }
    if (r.status != 0 && r.status != 1) out.push_back({ViolationKind::InvalidStatus, i, "status"});
    if (r.status == 1) any_event = true;
    if (!std::isfinite(r.exposure)) {
      out.push_back({ViolationKind::NonFinite, i, d.exposure_name});
    } else {
      distinct_exposure.insert(r.exposure);
    }
    if (r.confounders.size() != d.confounder_arity()) {
      out.push_back({ViolationKind::ArityMismatch, i, "confounders"});
    } else {
      for (std::size_t j = 0; j < r.confounders.size(); ++j) {
        if (!std::isfinite(r.confounders[j])) {
          out.push_back({ViolationKind::NonFinite, i, d.confounder_names[j]});
        }
      }
    }
  }
  if (!d.records.empty() && !any_event) out.push_back({ViolationKind::AllCensored, std::nullopt, ""});
  if (!d.records.empty() && distinct_exposure.size() < 2) {
    out.push_back({ViolationKind::ConstantExposure, std::nullopt, d.exposure_name});
  }
  return out;
}

void require_valid(const Dataset& d) {
  auto violations = validate(d);
  if (violations.empty()) return;
  std::string message;
  for (std::size_t i = 0; i < violations.size() && i < 10; ++i) {
    if (i) message += "; ";
    message += violations[i].describe();
  }
  if (violations.size() > 10) message += fmt::format("; ... {} more", violations.size() - 10);
  throw Error(ErrorKind::InvalidDataset, message);
}

}  // namespace contsurv
