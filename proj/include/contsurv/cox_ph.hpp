#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "contsurv/dataset.hpp"
#include "contsurv/design.hpp"
#include "contsurv/step_function.hpp"

namespace contsurv {

struct CoxOptions {
  int max_iterations = 25;
  double tolerance = 1e-9;   // relative log-likelihood change, or score sup-norm
  int max_halvings = 10;
  double coefficient_limit = 50.0;
  // A Newton step larger than this (relative to max(1, |beta_j|)) remaining at
  // convergence means the likelihood keeps rising towards infinity.
  double divergent_step = 1e-3;
};

// Breslow-ties log partial likelihood with its score and observed information.
struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
};

PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, std::span<const double> time,
                                         std::span<const int> status, const Eigen::VectorXd& beta);

struct CoxFit {
  Eigen::VectorXd coefficients;
  std::vector<std::string> coefficient_names;
  StepFunction baseline_cumhaz;  // cumulative baseline hazard at covariate row 0
  Eigen::MatrixXd covariance;
  double loglik_null = 0.0;
  double loglik_final = 0.0;
  int iterations = 0;
  bool converged = false;
  Design design;
  double exposure_min = 0.0;
  double exposure_max = 0.0;
  std::size_t n = 0;
  std::size_t events = 0;

  double linear_predictor(std::span<const double> design_row) const;
  Eigen::VectorXd standard_errors() const;
};

CoxFit fit_cox(const Dataset& d, const Design& design, const CoxOptions& options = {});

// Cumulative baseline hazard with Breslow increments d_k / sum_{risk} exp(beta x).
StepFunction breslow_baseline(const Dataset& d, const Eigen::VectorXd& beta, const Design& design);

// S(t | x) = exp(-H0(t) exp(beta x)) for one design row.
std::vector<double> predict_survival(const CoxFit& fit, std::span<const double> design_row,
                                     std::span<const double> times);

// Same, building the design row from an exposure value and confounder vector.
std::vector<double> predict_survival_at(const CoxFit& fit, double exposure, std::span<const double> confounders,
                                        std::span<const double> times);

nlohmann::json to_json(const CoxFit& fit);
CoxFit cox_fit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BasisSpec& spec);
BasisSpec basis_spec_from_json(const nlohmann::json& j);

}  // namespace contsurv
