#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace contsurv {

// One subject of a right-censored survival sample.
struct SubjectRecord {
  double time = 0.0;
  int status = 0;  // 1 = event, 0 = right-censored
  double exposure = 0.0;
  std::vector<double> confounders;
};

// Column bindings used when reading or writing a dataset.
struct Schema {
  std::string time = "time";
  std::string status = "status";
  std::string exposure;
  std::vector<std::string> confounders;
};

struct Dataset {
  std::vector<SubjectRecord> records;
  std::string exposure_name = "exposure";
  std::vector<std::string> confounder_names;

  std::size_t n() const { return records.size(); }
  std::size_t confounder_arity() const { return confounder_names.size(); }
  std::size_t event_count() const;

  std::vector<double> times() const;
  std::vector<int> statuses() const;
  std::vector<double> exposures() const;
  // Values of a named variable (the exposure or one of the confounders).
  std::vector<double> variable(const std::string& name) const;

  double min_exposure() const;
  double max_exposure() const;

  // Ascending distinct times with at least one event.
  std::vector<double> event_times() const;

  // Copy holding the records at the given indices (repeats allowed).
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

enum class ViolationKind {
  TooFewRecords,
  AllCensored,
  NonPositiveTime,
  InvalidStatus,
  NonFinite,
  ArityMismatch,
  ConstantExposure,
};

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> row;  // zero-based record index
  std::string field;

  std::string describe() const;
};

// Reads a header-first CSV; row order is preserved. Every row must satisfy the
// record invariants (positive finite time, status 0/1, finite values).
Dataset load_csv(const std::string& path, const Schema& schema);
Dataset read_csv(std::istream& in, const Schema& schema);

// Writes columns time,status,<exposure>,<confounders...> with round-trip
// exact number formatting.
void write_csv(const Dataset& d, std::ostream& out);
void save_csv(const Dataset& d, const std::string& path);

// Reports every invariant violation; an empty result means the dataset is valid.
std::vector<Violation> validate(const Dataset& d);

// Throws Error(InvalidDataset) listing the violations, if any.
void require_valid(const Dataset& d);

}  // namespace contsurv
