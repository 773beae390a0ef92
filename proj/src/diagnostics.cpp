#include "contsurv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"
#include "contsurv/gcomp.hpp"

namespace contsurv {

SchoenfeldResiduals schoenfeld_residuals(const CoxFit& fit, const Dataset& d, const Eigen::MatrixXd& covariates,
                                         std::vector<std::string> names) {
  if (!fit.converged) throw Error(ErrorKind::NotConverged, "Schoenfeld residuals need a converged fit");
  if (covariates.rows() != static_cast<Eigen::Index>(d.n())) {
    throw Error(ErrorKind::ArityMismatch, "covariate matrix rows differ from dataset size");
  }
  const auto n = d.n();
  const auto q = covariates.cols();
  const Eigen::MatrixXd design = fit.design.matrix(d);
  if (design.cols() != fit.coefficients.size()) throw Error(ErrorKind::ArityMismatch, "fit does not match dataset");

  // centering keeps exp() well scaled; the weighted means are unaffected
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (design.cols() > 0) {
    Eigen::MatrixXd centered = design.rowwise() - design.colwise().mean();
    eta = centered * fit.coefficients;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.records[a].time > d.records[b].time;
  });

  std::vector<std::pair<std::size_t, Eigen::VectorXd>> rows;  // (subject, residual), descending time
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
  std::size_t k = 0;
  while (k < n) {
    const double t = d.records[order[k]].time;
    std::size_t end = k;
    while (end < n && d.records[order[end]].time == t) {
      const auto i = static_cast<Eigen::Index>(order[end]);
      const double w = std::exp(eta(i));
      s0 += w;
      s1.noalias() += w * covariates.row(i).transpose();
      ++end;
    }
    const Eigen::VectorXd mean = s1 / s0;
    // within a tie group keep record order
    std::vector<std::size_t> group(order.begin() + static_cast<std::ptrdiff_t>(k),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(group.begin(), group.end(), std::greater<>());
    for (auto i : group) {
      if (d.records[i].status != 1) continue;
      rows.emplace_back(i, covariates.row(static_cast<Eigen::Index>(i)).transpose() - mean);
    }
    k = end;
  }
  std::reverse(rows.begin(), rows.end());

  SchoenfeldResiduals out;
  out.names = std::move(names);
  out.residuals.resize(static_cast<Eigen::Index>(rows.size()), q);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.subject.push_back(rows[r].first);
    out.time.push_back(d.records[rows[r].first].time);
    out.residuals.row(static_cast<Eigen::Index>(r)) = rows[r].second.transpose();
  }
  return out;
}

SchoenfeldResiduals schoenfeld_residuals(const CoxFit& fit, const Dataset& d) {
  return schoenfeld_residuals(fit, d, fit.design.matrix(d), fit.coefficient_names);
}

std::vector<double> martingale_residuals(const Dataset& d, const CoxFit& fit) {
  std::vector<double> out;
  out.reserve(d.n());
  std::vector<double> row(fit.design.columns());
  for (const auto& r : d.records) {
    fit.design.row(r.exposure, r.confounders, row);
    out.push_back(r.status - fit.baseline_cumhaz(r.time) * std::exp(fit.linear_predictor(row)));
  }
  return out;
}

std::vector<double> null_martingale_residuals(const Dataset& d) {
  const auto na = breslow_baseline(d, Eigen::VectorXd(0), Design());
  std::vector<double> out;
  out.reserve(d.n());
  for (const auto& r : d.records) out.push_back(r.status - na(r.time));
  return out;
}

SmoothCurve loess_overlay(std::span<const double> x, std::span<const double> y, double span, std::size_t points) {
  if (x.size() != y.size()) throw Error(ErrorKind::ArityMismatch, "x and y lengths differ");
  if (x.size() < 10) throw Error(ErrorKind::TooFewPoints, "LOESS needs at least 10 points");
  if (!(span > 0.0 && span <= 1.0)) throw Error(ErrorKind::InvalidArgument, "span must lie in (0,1]");
  const auto n = x.size();
  const auto q = std::max<std::size_t>(3, static_cast<std::size_t>(std::floor(span * static_cast<double>(n))));
  const auto [min_it, max_it] = std::minmax_element(x.begin(), x.end());

  SmoothCurve curve;
  curve.x = linspace(*min_it, *max_it, points);
  curve.y.reserve(points);
  std::vector<double> dist(n);
  for (double x0 : curve.x) {
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(x[i] - x0);
    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted.end());
    double h = sorted[q - 1];
    if (h <= 0.0) h = *std::max_element(dist.begin(), dist.end());
    // weighted least squares of y on (1, x - x0)
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = dist[i] / h;
      if (u >= 1.0) continue;
      const double c = 1.0 - u * u * u;
      const double w = c * c * c;
      const double dx = x[i] - x0;
      sw += w;
      swx += w * dx;
      swy += w * y[i];
      swxx += w * dx * dx;
      swxy += w * dx * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (sw <= 0.0) {
      curve.y.push_back(std::nan(""));
    } else if (std::abs(det) <= 1e-14 * std::max(1.0, sw * swxx)) {
      curve.y.push_back(swy / sw);
    } else {
      curve.y.push_back((swxx * swy - swx * swxy) / det);
    }
  }
  return curve;
}

void write_schoenfeld_csv(const SchoenfeldResiduals& r, std::ostream& out) {
  out << "time,subject";
  for (const auto& name : r.names) out << ',' << name;
  out << '\n';
  for (std::size_t k = 0; k < r.time.size(); ++k) {
    out << csv::format_double(r.time[k]) << ',' << r.subject[k];
    for (Eigen::Index j = 0; j < r.residuals.cols(); ++j) {
      out << ',' << csv::format_double(r.residuals(static_cast<Eigen::Index>(k), j));
    }
    out << '\n';
  }
}

void write_martingale_csv(std::span<const double> covariate, std::span<const double> residuals,
                          const std::string& covariate_name, std::ostream& out) {
  out << covariate_name << ",residual\n";
  for (std::size_t i = 0; i < covariate.size(); ++i) {
    out << csv::format_double(covariate[i]) << ',' << csv::format_double(residuals[i]) << '\n';
  }
}

}  // namespace contsurv
