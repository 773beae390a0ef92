#include "contsurv/estimands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"
#include "contsurv/gcomp.hpp"
#include "contsurv/kaplan_meier.hpp"

namespace contsurv {

std::vector<EstimandValue> landmark(const Surface& s, double t_star) {
  s.check();
  if (!(t_star >= 0.0)) throw Error(ErrorKind::InvalidArgument, "landmark time must be >= 0");
  const auto j = static_cast<Eigen::Index>(s.time_index(t_star));
  std::vector<EstimandValue> out;
  out.reserve(s.nz());
  for (std::size_t i = 0; i < s.nz(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.push_back({s.values(r, j), t_star, s.z_grid[i], static_cast<bool>(s.defined(r, j))});
  }
  return out;
}

std::vector<EstimandValue> quantile_curve(const Surface& s, double p) {
  s.check();
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0,1)");
  std::vector<EstimandValue> out;
  out.reserve(s.nz());
  for (std::size_t i = 0; i < s.nz(); ++i) {
    EstimandValue v{std::nan(""), std::nan(""), s.z_grid[i], false};
    for (std::size_t j = 0; j < s.nt(); ++j) {
      if (s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= p) {
        v.value = s.t_grid[j];
        v.t = s.t_grid[j];
        v.defined = true;
        break;
      }
    }
    out.push_back(v);
  }
  return out;
}

std::vector<EstimandValue> rmst_curve(const Surface& s, double lambda) {
  s.check();
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "RMST horizon must be > 0");
  if (lambda > s.t_grid.back()) {
    throw Error(ErrorKind::LambdaBeyondGrid,
                fmt::format("horizon {} exceeds the last grid time {}", lambda, s.t_grid.back()));
  }
  std::vector<EstimandValue> out;
  out.reserve(s.nz());
  for (std::size_t i = 0; i < s.nz(); ++i) {
    double area = 0.0;
    for (std::size_t j = 0; j < s.nt() && s.t_grid[j] < lambda; ++j) {
      const double right = j + 1 < s.nt() ? std::min(s.t_grid[j + 1], lambda) : lambda;
      area += s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (right - s.t_grid[j]);
    }
    out.push_back({area, lambda, s.z_grid[i], true});
  }
  return out;
}

std::string ContrastSpec::label() const {
  const std::string op = kind == ContrastKind::Difference ? "difference" : "ratio";
  if (!tau) return op + "_km";
  return fmt::format("{}_tau={}", op, csv::format_double(*tau));
}

ContrastSurface contrast_with_reference(const Surface& s, ContrastKind kind, std::span<const double> reference,
                                        const std::string& label) {
  s.check();
  if (reference.size() != s.nt()) throw Error(ErrorKind::InconsistentGrid, "reference curve does not match t grid");
  ContrastSurface c = s;
  c.estimand = label;
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
      const double sz = s.values(i, j);
      const double ref = reference[static_cast<std::size_t>(j)];
      if (kind == ContrastKind::Difference) {
        c.values(i, j) = ref - sz;
        c.defined(i, j) = s.defined(i, j);
      } else if (sz == 0.0 || !s.defined(i, j)) {
        c.values(i, j) = std::nan("");
        c.defined(i, j) = false;
      } else {
        c.values(i, j) = ref / sz;
        c.defined(i, j) = true;
      }
    }
  }
  return c;
}

ContrastSurface contrast_surface(const Surface& s, const ContrastSpec& spec, const std::optional<StepFunction>& km) {
  if (spec.tau) {
    throw Error(ErrorKind::InvalidArgument,
                "fixed-value contrasts need the fitted model to evaluate the reference exposure");
  }
  if (!km) throw Error(ErrorKind::MissingKMReference, "observed-survival contrast needs a Kaplan-Meier curve");
  const auto reference = km->evaluate(s.t_grid);
  return contrast_with_reference(s, spec.kind, reference, spec.label());
}

ContrastSurface contrast_surface(const Surface& s, const ContrastSpec& spec, const CoxFit& fit, const Dataset& d) {
  if (!spec.tau) return contrast_surface(s, spec, std::optional<StepFunction>(kaplan_meier(d)));
  const double tau = *spec.tau;
  if (tau < s.z_grid.front() || tau > s.z_grid.back()) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("reference value {} lies outside the z grid [{}, {}]", tau, s.z_grid.front(), s.z_grid.back()));
  }
  const auto reference = counterfactual_curve(fit, d, tau, s.t_grid);
  return contrast_with_reference(s, spec.kind, reference, spec.label());
}

void write_estimand_csv(const std::vector<EstimandValue>& values, const std::string& estimand, std::ostream& out,
                        bool header) {
  if (header) out << "z,t,value,defined,estimand\n";
  for (const auto& v : values) {
    out << csv::format_double(v.z) << ',' << (std::isnan(v.t) ? std::string("NA") : csv::format_double(v.t)) << ','
        << (v.defined ? csv::format_double(v.value) : std::string("NA")) << ',' << (v.defined ? 1 : 0) << ','
        << estimand << '\n';
  }
}

}  // namespace contsurv
