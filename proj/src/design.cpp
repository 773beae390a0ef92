#include "contsurv/design.hpp"

#include <algorithm>

#include "contsurv/error.hpp"

namespace contsurv {

Design Design::standard(const Dataset& d, const BasisSpec& exposure_basis, bool adjust_for_confounders) {
  std::vector<Term> terms;
  terms.push_back({d.exposure_name, exposure_basis});
  if (adjust_for_confounders) {
    for (const auto& name : d.confounder_names) terms.push_back({name, BasisSpec::linear()});
  }
  return Design(std::move(terms));
}

void Design::bind(const std::string& exposure_name, const std::vector<std::string>& confounder_names) {
  exposure_name_ = exposure_name;
  confounder_names_ = confounder_names;
  confounder_arity_ = confounder_names.size();
  sources_.clear();
  for (const auto& t : terms_) {
    if (t.variable == exposure_name) {
      sources_.push_back(-1);
      continue;
    }
    auto it = std::find(confounder_names.begin(), confounder_names.end(), t.variable);
    if (it == confounder_names.end()) throw Error(ErrorKind::MissingColumn, t.variable);
    sources_.push_back(static_cast<int>(it - confounder_names.begin()));
  }
}

Design Design::resolve(const Dataset& d) const {
  Design out = *this;
  out.bind(d.exposure_name, d.confounder_names);
  for (auto& t : out.terms_) {
    auto values = d.variable(t.variable);
    t.basis = resolve_knots(values, t.basis);
  }
  out.resolved_ = true;
  return out;
}

Design Design::from_resolved(std::vector<Term> terms, std::string exposure_name,
                             std::vector<std::string> confounder_names) {
  Design out(std::move(terms));
  out.bind(exposure_name, confounder_names);
  for (const auto& t : out.terms_) {
    if (!t.basis.resolved) throw Error(ErrorKind::UnresolvedSpec, "term '" + t.variable + "' is not resolved");
  }
  out.resolved_ = true;
  return out;
}

std::size_t Design::columns() const {
  std::size_t n = 0;
  for (const auto& t : terms_) n += static_cast<std::size_t>(t.basis.columns());
  return n;
}

std::vector<std::string> Design::column_names() const {
  std::vector<std::string> names;
  for (const auto& t : terms_) {
    auto part = basis_column_names(t.basis, t.variable);
    names.insert(names.end(), part.begin(), part.end());
  }
  return names;
}

bool Design::uses_confounders() const {
  return std::any_of(sources_.begin(), sources_.end(), [](int s) { return s >= 0; });
}

bool Design::row(double exposure, std::span<const double> confounders, std::span<double> out) const {
  if (!resolved_) throw Error(ErrorKind::UnresolvedSpec, "design must be resolved");
  if (confounders.size() != confounder_arity_) {
    throw Error(ErrorKind::ArityMismatch, "confounder vector does not match the design");
  }
  if (out.size() != columns()) throw Error(ErrorKind::ArityMismatch, "output row has the wrong width");
  bool extrapolated = false;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto width = static_cast<std::size_t>(terms_[k].basis.columns());
    const double x = sources_[k] < 0 ? exposure : confounders[static_cast<std::size_t>(sources_[k])];
    extrapolated = evaluate_row(x, terms_[k].basis, out.subspan(offset, width)) || extrapolated;
    offset += width;
  }
  return extrapolated;
}

Eigen::MatrixXd Design::matrix(const Dataset& d) const {
  const auto p = columns();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d.n()), static_cast<Eigen::Index>(p));
  std::vector<double> buffer(p);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto& r = d.records[i];
    row(r.exposure, r.confounders, buffer);
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buffer[j];
  }
  return m;
}

}  // namespace contsurv
