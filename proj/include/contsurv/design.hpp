#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "contsurv/dataset.hpp"
#include "contsurv/spline_basis.hpp"

namespace contsurv {

// One model term: a dataset variable passed through a covariate basis.
struct Term {
  std::string variable;
  BasisSpec basis;
};

// Per-variable basis bindings that turn a dataset into a Cox design matrix.
// After `resolve`, every basis is fully specified and each term is bound to
// either the exposure or a confounder slot of SubjectRecord.
class Design {
 public:
  Design() = default;
  explicit Design(std::vector<Term> terms) : terms_(std::move(terms)) {}

  // Exposure through `exposure_basis`, every confounder linear.
  static Design standard(const Dataset& d, const BasisSpec& exposure_basis = BasisSpec::linear(),
                         bool adjust_for_confounders = true);

  Design resolve(const Dataset& d) const;

  const std::vector<Term>& terms() const { return terms_; }
  bool resolved() const { return resolved_; }
  std::size_t columns() const;
  std::vector<std::string> column_names() const;
  const std::string& exposure_name() const { return exposure_name_; }
  // Number of confounder slots expected in rows passed to `row`.
  std::size_t confounder_arity() const { return confounder_arity_; }
  bool uses_confounders() const;

  // Design row for a subject with the given exposure and confounders.
  // Returns true when any term had to extrapolate beyond its boundary.
  bool row(double exposure, std::span<const double> confounders, std::span<double> out) const;

  Eigen::MatrixXd matrix(const Dataset& d) const;

  // Rebuilds a resolved design from serialized parts.
  static Design from_resolved(std::vector<Term> terms, std::string exposure_name,
                              std::vector<std::string> confounder_names);
  const std::vector<std::string>& confounder_names() const { return confounder_names_; }

 private:
  std::vector<Term> terms_;
  std::vector<int> sources_;  // -1 = exposure, j >= 0 = confounder j
  std::string exposure_name_;
  std::vector<std::string> confounder_names_;
  std::size_t confounder_arity_ = 0;
  bool resolved_ = false;

  void bind(const std::string& exposure_name, const std::vector<std::string>& confounder_names);
};

}  // namespace contsurv
