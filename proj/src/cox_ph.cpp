#include "contsurv/cox_ph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "contsurv/error.hpp"

namespace contsurv {

namespace {

// Indices sorted by descending time; ties keep input order so sums are
// accumulated in a fixed sequence.
std::vector<std::size_t> descending_time_order(std::span<const double> time) {
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
  return order;
}

PartialLikelihood partial_likelihood_sorted(const Eigen::MatrixXd& x, std::span<const double> time,
                                            std::span<const int> status, const std::vector<std::size_t>& order,
                                            const Eigen::VectorXd& beta) {
  const auto p = x.cols();
  PartialLikelihood out;
  out.score = Eigen::VectorXd::Zero(p);
  out.information = Eigen::MatrixXd::Zero(p, p);

  Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(x * beta) : Eigen::VectorXd::Zero(x.rows());
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  std::size_t k = 0;
  const std::size_t n = order.size();
  while (k < n) {
    const double t = time[order[k]];
    std::size_t end = k;
    while (end < n && time[order[end]] == t) {
      const auto i = static_cast<Eigen::Index>(order[end]);
      const double r = std::exp(eta(i));
      s0 += r;
      if (p > 0) {
        s1.noalias() += r * x.row(i).transpose();
        s2.noalias() += r * x.row(i).transpose() * x.row(i);
      }
      ++end;
    }
    for (std::size_t m = k; m < end; ++m) {
      const auto i = static_cast<Eigen::Index>(order[m]);
      if (status[order[m]] != 1) continue;
      out.loglik += eta(i) - std::log(s0);
      if (p > 0) {
        const Eigen::VectorXd mean = s1 / s0;
        out.score.noalias() += x.row(i).transpose() - mean;
        out.information.noalias() += s2 / s0 - mean * mean.transpose();
      }
    }
    k = end;
  }
  return out;
}

struct CenteredDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd means;
};

CenteredDesign center(const Eigen::MatrixXd& x) {
  CenteredDesign c;
  c.means = x.cols() > 0 ? Eigen::VectorXd(x.colwise().mean().transpose()) : Eigen::VectorXd();
  c.x = x;
  if (x.cols() > 0) c.x.rowwise() -= c.means.transpose();
  return c;
}

StepFunction breslow_from_design(const Eigen::MatrixXd& x, std::span<const double> time, std::span<const int> status,
                                 const Eigen::VectorXd& beta) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (std::none_of(status.begin(), status.end(), [](int s) { return s == 1; })) {
    throw Error(ErrorKind::NoEvents, "no events to estimate a baseline hazard");
  }
  const auto centered = center(x);
  const double shift = x.cols() > 0 ? centered.means.dot(beta) : 0.0;
  Eigen::VectorXd eta = x.cols() > 0 ? Eigen::VectorXd(centered.x * beta) : Eigen::VectorXd::Zero(x.rows());

  auto order = descending_time_order(time);
  // risk-set sums at each distinct event time, collected in descending order
  std::vector<double> event_times, increments;
  double s0 = 0.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = time[order[k]];
    std::size_t end = k;
    int deaths = 0;
    while (end < n && time[order[end]] == t) {
      s0 += std::exp(eta(static_cast<Eigen::Index>(order[end])));
      deaths += status[order[end]] == 1 ? 1 : 0;
      ++end;
    }
    if (deaths > 0) {
      event_times.push_back(t);
      increments.push_back(static_cast<double>(deaths) / s0);
    }
    k = end;
  }
  std::reverse(event_times.begin(), event_times.end());
  std::reverse(increments.begin(), increments.end());
  const double scale = std::exp(-shift);
  std::vector<double> cumulative(increments.size());
  double h = 0.0;
  for (std::size_t j = 0; j < increments.size(); ++j) {
    h += increments[j];
    cumulative[j] = h * scale;
  }
  return StepFunction(std::move(event_times), std::move(cumulative), 0.0);
}

}  // namespace

PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, std::span<const double> time,
                                         std::span<const int> status, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(x.rows()) != time.size() || time.size() != status.size()) {
    throw Error(ErrorKind::ArityMismatch, "design, time and status lengths differ");
  }
  if (beta.size() != x.cols()) throw Error(ErrorKind::ArityMismatch, "coefficient vector does not match design");
  return partial_likelihood_sorted(x, time, status, descending_time_order(time), beta);
}

double CoxFit::linear_predictor(std::span<const double> design_row) const {
  if (static_cast<Eigen::Index>(design_row.size()) != coefficients.size()) {
    throw Error(ErrorKind::ArityMismatch,
                fmt::format("covariate row has {} entries, model has {}", design_row.size(), coefficients.size()));
  }
  double lp = 0.0;
  for (std::size_t j = 0; j < design_row.size(); ++j) lp += coefficients(static_cast<Eigen::Index>(j)) * design_row[j];
  return lp;
}

Eigen::VectorXd CoxFit::standard_errors() const { return covariance.diagonal().cwiseSqrt(); }

CoxFit fit_cox(const Dataset& d, const Design& design, const CoxOptions& options) {
  require_valid(d);
  CoxFit fit;
  fit.design = design.resolved() ? design : design.resolve(d);
  fit.coefficient_names = fit.design.column_names();
  fit.exposure_min = d.min_exposure();
  fit.exposure_max = d.max_exposure();
  fit.n = d.n();
  fit.events = d.event_count();

  const Eigen::MatrixXd raw = fit.design.matrix(d);
  const auto centered = center(raw);
  const auto time = d.times();
  const auto status = d.statuses();
  const auto order = descending_time_order(time);
  const auto p = raw.cols();

  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered.x);
    if (qr.rank() < p) {
      throw Error(ErrorKind::SingularInformation,
                  fmt::format("design has rank {} < {} columns (collinear covariates)", qr.rank(), p));
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto current = partial_likelihood_sorted(centered.x, time, status, order, beta);
  fit.loglik_null = current.loglik;

  bool converged = p == 0;
  int iterations = 0;
  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(current.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      throw Error(ErrorKind::SingularInformation, fmt::format("information matrix singular at iteration {}", iterations));
    }
    Eigen::VectorXd step = ldlt.solve(current.score);
    Eigen::VectorXd candidate = beta + step;
    auto next = partial_likelihood_sorted(centered.x, time, status, order, candidate);
    for (int h = 0; h < options.max_halvings && !(next.loglik >= current.loglik); ++h) {
      step *= 0.5;
      candidate = beta + step;
      next = partial_likelihood_sorted(centered.x, time, status, order, candidate);
    }
    const double change = std::abs(next.loglik - current.loglik);
    const bool small_change = change <= options.tolerance * std::max(std::abs(next.loglik), 1e-300);
    beta = candidate;
    current = std::move(next);
    converged = small_change || current.score.cwiseAbs().maxCoeff() < options.tolerance;
  }
  // judged on where Newton ends up: early steps may overshoot on badly scaled bases
  const auto too_large = [&] { return p > 0 && beta.cwiseAbs().maxCoeff() > options.coefficient_limit; };
  if (too_large() || (!converged && !beta.allFinite())) {
    throw Error(ErrorKind::MonotoneLikelihood,
                fmt::format("coefficient magnitude exceeded {} (likelihood is monotone)", options.coefficient_limit));
  }
  if (!converged) throw Error(ErrorKind::NotConverged, fmt::format("no convergence after {} iterations", iterations));

  // polish: the likelihood criterion stops with a score near 1e-5; a few more
  // full steps bring it to rounding level
  for (int k = 0; k < 3 && p > 0 && current.score.cwiseAbs().maxCoeff() > 1e-13; ++k) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(current.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd candidate = beta + ldlt.solve(current.score);
    auto next = partial_likelihood_sorted(centered.x, time, status, order, candidate);
    if (!(next.score.cwiseAbs().maxCoeff() < current.score.cwiseAbs().maxCoeff()) ||
        next.loglik < current.loglik - 1e-12 * std::abs(current.loglik)) {
      break;
    }
    beta = candidate;
    current = std::move(next);
  }

  if (p > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(current.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorKind::SingularInformation, "information matrix singular at the optimum");
    }
    const Eigen::VectorXd remaining = ldlt.solve(current.score);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(remaining(j)) > options.divergent_step * std::max(1.0, std::abs(beta(j)))) {
        throw Error(ErrorKind::MonotoneLikelihood,
                    fmt::format("coefficient {} drifts without bound (likelihood is monotone)", fit.coefficient_names[j]));
      }
    }
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    fit.covariance = 0.5 * (cov + cov.transpose());
  } else {
    fit.covariance = Eigen::MatrixXd(0, 0);
  }

  fit.coefficients = beta;
  fit.loglik_final = p == 0 ? fit.loglik_null : current.loglik;
  fit.iterations = iterations;
  fit.converged = true;
  fit.baseline_cumhaz = breslow_from_design(raw, time, status, beta);
  return fit;
}

StepFunction breslow_baseline(const Dataset& d, const Eigen::VectorXd& beta, const Design& design) {
  if (!beta.allFinite()) throw Error(ErrorKind::InvalidArgument, "coefficients must be finite");
  const Design resolved = design.resolved() ? design : design.resolve(d);
  const Eigen::MatrixXd raw = resolved.matrix(d);
  if (beta.size() != raw.cols()) throw Error(ErrorKind::ArityMismatch, "coefficient vector does not match design");
  const auto time = d.times();
  const auto status = d.statuses();
  return breslow_from_design(raw, time, status, beta);
}

std::vector<double> predict_survival(const CoxFit& fit, std::span<const double> design_row,
                                     std::span<const double> times) {
  const double risk = std::exp(fit.linear_predictor(design_row));
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(std::exp(-fit.baseline_cumhaz(t) * risk));
  return out;
}

std::vector<double> predict_survival_at(const CoxFit& fit, double exposure, std::span<const double> confounders,
                                        std::span<const double> times) {
  std::vector<double> row(fit.design.columns());
  fit.design.row(exposure, confounders, row);
  return predict_survival(fit, row, times);
}

nlohmann::json to_json(const BasisSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  j["degree"] = spec.degree;
  j["df"] = spec.df;
  j["knots"] = spec.knots;
  if (spec.boundary) j["boundary"] = {(*spec.boundary)[0], (*spec.boundary)[1]};
  if (!spec.cutpoints.empty()) j["cutpoints"] = spec.cutpoints;
  j["intercept"] = spec.intercept;
  j["resolved"] = spec.resolved;
  return j;
}

BasisSpec basis_spec_from_json(const nlohmann::json& j) {
  BasisSpec s;
  s.kind = basis_kind_from_string(j.at("kind").get<std::string>());
  s.degree = j.value("degree", 3);
  s.df = j.value("df", 0);
  s.knots = j.value("knots", std::vector<double>{});
  if (j.contains("boundary")) {
    auto b = j.at("boundary").get<std::vector<double>>();
    if (b.size() != 2) throw Error(ErrorKind::ParseError, "boundary must have two entries");
    s.boundary = std::array<double, 2>{b[0], b[1]};
  }
  s.cutpoints = j.value("cutpoints", std::vector<double>{});
  s.intercept = j.value("intercept", false);
  s.resolved = j.value("resolved", false);
  return s;
}

nlohmann::json to_json(const CoxFit& fit) {
  nlohmann::json j;
  j["model"] = "coxph";
  j["ties"] = "breslow";
  j["n"] = fit.n;
  j["events"] = fit.events;
  auto se = fit.standard_errors();
  nlohmann::json coefs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k) {
    coefs.push_back({{"name", fit.coefficient_names[static_cast<std::size_t>(k)]},
                     {"estimate", fit.coefficients(k)},
                     {"se", se(k)},
                     {"hazard_ratio", std::exp(fit.coefficients(k))}});
  }
  j["coefficients"] = coefs;
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["loglik_null"] = fit.loglik_null;
  j["loglik_final"] = fit.loglik_final;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["baseline_cumhaz"] = {{"knots", fit.baseline_cumhaz.knots()}, {"values", fit.baseline_cumhaz.values()}};
  j["exposure_range"] = {fit.exposure_min, fit.exposure_max};
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : fit.design.terms()) terms.push_back({{"variable", t.variable}, {"basis", to_json(t.basis)}});
  j["design"] = {{"exposure", fit.design.exposure_name()},
                 {"confounders", fit.design.confounder_names()},
                 {"terms", terms}};
  return j;
}

CoxFit cox_fit_from_json(const nlohmann::json& j) {
  try {
    CoxFit fit;
    std::vector<Term> terms;
    for (const auto& t : j.at("design").at("terms")) {
      terms.push_back({t.at("variable").get<std::string>(), basis_spec_from_json(t.at("basis"))});
    }
    fit.design = Design::from_resolved(std::move(terms), j.at("design").at("exposure").get<std::string>(),
                                       j.at("design").at("confounders").get<std::vector<std::string>>());
    const auto& coefs = j.at("coefficients");
    fit.coefficients.resize(static_cast<Eigen::Index>(coefs.size()));
    for (std::size_t k = 0; k < coefs.size(); ++k) {
      fit.coefficients(static_cast<Eigen::Index>(k)) = coefs[k].at("estimate").get<double>();
      fit.coefficient_names.push_back(coefs[k].at("name").get<std::string>());
    }
    if (fit.coefficient_names.size() != fit.design.columns()) {
      throw Error(ErrorKind::ArityMismatch, "coefficient count does not match the design");
    }
    const auto& cov = j.at("covariance");
    const auto p = fit.coefficients.size();
    fit.covariance = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      for (Eigen::Index c = 0; c < p; ++c) {
        fit.covariance(r, c) = cov.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
      }
    }
    fit.loglik_null = j.at("loglik_null").get<double>();
    fit.loglik_final = j.at("loglik_final").get<double>();
    fit.iterations = j.at("iterations").get<int>();
    fit.converged = j.at("converged").get<bool>();
    fit.baseline_cumhaz = StepFunction(j.at("baseline_cumhaz").at("knots").get<std::vector<double>>(),
                                       j.at("baseline_cumhaz").at("values").get<std::vector<double>>(), 0.0);
    auto range = j.at("exposure_range").get<std::vector<double>>();
    fit.exposure_min = range.at(0);
    fit.exposure_max = range.at(1);
    fit.n = j.value("n", std::size_t{0});
    fit.events = j.value("events", std::size_t{0});
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed fit document: ") + e.what());
  }
}

}  // namespace contsurv
