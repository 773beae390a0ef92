#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "contsurv/cox_ph.hpp"
#include "contsurv/dataset.hpp"

namespace contsurv {

struct SchoenfeldResiduals {
  std::vector<double> time;          // event time of each row, ascending
  std::vector<std::size_t> subject;  // record index of the event
  Eigen::MatrixXd residuals;         // one row per event, one column per covariate
  std::vector<std::string> names;
};

// x_event minus the exp(beta x)-weighted risk-set mean of x, one row per event.
// Tied events each use the full risk set.
SchoenfeldResiduals schoenfeld_residuals(const CoxFit& fit, const Dataset& d);

// Residuals for arbitrary covariate columns, weighted by the fit's linear
// predictor (use with a null fit to inspect covariates left out of the model).
SchoenfeldResiduals schoenfeld_residuals(const CoxFit& fit, const Dataset& d, const Eigen::MatrixXd& covariates,
                                         std::vector<std::string> names);

// status_i - H0(time_i) exp(beta x_i).
std::vector<double> martingale_residuals(const Dataset& d, const CoxFit& fit);

// Intercept-only model: status_i - Nelson-Aalen(time_i).
std::vector<double> null_martingale_residuals(const Dataset& d);

struct SmoothCurve {
  std::vector<double> x;
  std::vector<double> y;
};

// Tricube-weighted local linear regression evaluated on `points` equally
// spaced values over range(x). The neighbourhood holds floor(span * n) points.
SmoothCurve loess_overlay(std::span<const double> x, std::span<const double> y, double span = 0.75,
                          std::size_t points = 100);

void write_schoenfeld_csv(const SchoenfeldResiduals& r, std::ostream& out);
void write_martingale_csv(std::span<const double> covariate, std::span<const double> residuals,
                          const std::string& covariate_name, std::ostream& out);

}  // namespace contsurv
