#include "contsurv/gcomp.hpp"

#include <algorithm>
#include <cmath>

#include "contsurv/error.hpp"
#include "contsurv/parallel.hpp"

namespace contsurv {

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> out(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) out[k] = lo + step * static_cast<double>(k);
  out.back() = hi;
  return out;
}

Grids default_grids(const Dataset& d, std::size_t z_points) {
  Grids g;
  g.z = linspace(d.min_exposure(), d.max_exposure(), z_points);
  g.t.push_back(0.0);
  for (double t : d.event_times()) {
    if (t > 0.0) g.t.push_back(t);
  }
  return g;
}

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      compensation_ += (sum_ - t) + v;
    } else {
      compensation_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

void check_grids(std::span<const double> z_grid, std::span<const double> t_grid) {
  if (z_grid.empty() || t_grid.empty()) throw Error(ErrorKind::GridEmpty, "z and t grids must be non-empty");
  if (t_grid.front() != 0.0) throw Error(ErrorKind::InvalidArgument, "t grid must start at 0");
  for (std::size_t j = 1; j < t_grid.size(); ++j) {
    if (!(t_grid[j] > t_grid[j - 1])) throw Error(ErrorKind::InvalidArgument, "t grid must be strictly ascending");
  }
  for (std::size_t i = 1; i < z_grid.size(); ++i) {
    if (!(z_grid[i] > z_grid[i - 1])) throw Error(ErrorKind::InvalidArgument, "z grid must be strictly ascending");
  }
}

void check_compatible(const CoxFit& fit, const Dataset& d) {
  if (fit.design.confounder_arity() != d.confounder_arity()) {
    throw Error(ErrorKind::ArityMismatch, "dataset confounders do not match the fitted design");
  }
  if (fit.design.exposure_name() != d.exposure_name) {
    throw Error(ErrorKind::ArityMismatch,
                "fit exposure '" + fit.design.exposure_name() + "' differs from dataset exposure '" + d.exposure_name + "'");
  }
  if (d.n() == 0) throw Error(ErrorKind::EmptyDataset, "no records to standardize over");
}

// Writes one row of the surface into `out` (size t_grid.size()).
void standardized_row(const CoxFit& fit, const Dataset& d, double z, std::span<const double> baseline,
                      std::span<double> out) {
  const std::size_t p = fit.design.columns();
  std::vector<double> row(p);
  if (!fit.design.uses_confounders()) {
    // every record contributes the same prediction
    fit.design.row(z, d.records.front().confounders, row);
    const double risk = std::exp(fit.linear_predictor(row));
    for (std::size_t j = 0; j < baseline.size(); ++j) out[j] = std::exp(-baseline[j] * risk);
    return;
  }
  std::vector<double> risk(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    fit.design.row(z, d.records[i].confounders, row);
    risk[i] = std::exp(fit.linear_predictor(row));
  }
  const double n = static_cast<double>(d.n());
  for (std::size_t j = 0; j < baseline.size(); ++j) {
    const double h = baseline[j];
    if (h == 0.0) {
      out[j] = 1.0;
      continue;
    }
    CompensatedSum sum;
    for (double r : risk) sum.add(std::exp(-h * r));
    out[j] = std::clamp(sum.value() / n, 0.0, 1.0);
  }
}

}  // namespace

SurvivalSurface counterfactual_surface(const CoxFit& fit, const Dataset& d, std::span<const double> z_grid,
                                       std::span<const double> t_grid, unsigned threads) {
  check_grids(z_grid, t_grid);
  check_compatible(fit, d);
  const auto baseline = fit.baseline_cumhaz.evaluate(t_grid);

  SurvivalSurface s;
  s.z_grid.assign(z_grid.begin(), z_grid.end());
  s.t_grid.assign(t_grid.begin(), t_grid.end());
  s.values.resize(static_cast<Eigen::Index>(z_grid.size()), static_cast<Eigen::Index>(t_grid.size()));
  s.defined.setConstant(s.values.rows(), s.values.cols(), true);
  s.extrapolated.resize(z_grid.size());
  s.estimand = "survival";
  s.adjusted = fit.design.uses_confounders();
  std::string model = "coxph(";
  for (std::size_t k = 0; k < fit.coefficient_names.size(); ++k) {
    if (k) model += " + ";
    model += fit.coefficient_names[k];
  }
  s.model = model + ")";

  std::vector<std::vector<double>> rows(z_grid.size());
  parallel_for(z_grid.size(), resolve_threads(threads), [&](std::size_t i) {
    rows[i].resize(t_grid.size());
    standardized_row(fit, d, z_grid[i], baseline, rows[i]);
  });
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    s.extrapolated[i] = z_grid[i] < fit.exposure_min || z_grid[i] > fit.exposure_max;
  }
  return s;
}

std::vector<double> counterfactual_curve(const CoxFit& fit, const Dataset& d, double z,
                                         std::span<const double> t_grid) {
  const double zs[] = {z};
  check_grids(zs, t_grid);
  check_compatible(fit, d);
  const auto baseline = fit.baseline_cumhaz.evaluate(t_grid);
  std::vector<double> out(t_grid.size());
  standardized_row(fit, d, z, baseline, out);
  return out;
}

}  // namespace contsurv
