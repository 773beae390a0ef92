#include "contsurv/simulator.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "contsurv/error.hpp"
#include "contsurv/resampling.hpp"

namespace contsurv {

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) {
    x = splitmix64(x);
    s = x;
  }
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random bits, shifted off zero
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::exponential() { return -std::log(uniform()); }

void Scenario::check() const {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "scenario needs n >= 2");
  if (baseline == BaselineKind::Exponential && !(rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "baseline rate must be positive");
  }
  if (baseline == BaselineKind::Weibull && !(weibull_shape > 0.0 && weibull_scale > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Weibull shape and scale must be positive");
  }
  if (confounded && !(confounder_sd > 0.0)) throw Error(ErrorKind::InvalidArgument, "confounder sd must be positive");
  if (censor_rate < 0.0) throw Error(ErrorKind::InvalidArgument, "censoring rate must be >= 0");
}

double Scenario::cumulative_baseline(double t) const {
  if (t <= 0.0) return 0.0;
  if (baseline == BaselineKind::Exponential) return rate * t;
  return std::pow(t / weibull_scale, weibull_shape);
}

double Scenario::inverse_cumulative_baseline(double h) const {
  if (baseline == BaselineKind::Exponential) return h / rate;
  return weibull_scale * std::pow(h, 1.0 / weibull_shape);
}

Dataset generate(const Scenario& s) {
  s.check();
  Rng rng(s.seed);
  Dataset d;
  d.exposure_name = "z";
  if (s.confounded) d.confounder_names = {"x"};
  d.records.reserve(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double x = s.confounded ? s.confounder_mean + s.confounder_sd * rng.normal() : 0.0;
    const double z = rng.normal() + (s.confounded ? s.gamma * x : 0.0);
    const double lp = s.effect(z) + (s.confounded ? s.alpha * x : 0.0);
    // inverse transform: H0(T) exp(lp) ~ Exponential(1)
    const double event = s.inverse_cumulative_baseline(rng.exponential() / std::exp(lp));
    const double censor =
        s.censor_rate > 0.0 ? rng.exponential() / s.censor_rate : std::numeric_limits<double>::infinity();
    SubjectRecord r;
    r.time = std::max(std::min(event, censor), std::numeric_limits<double>::min());
    r.status = event <= censor ? 1 : 0;
    r.exposure = z;
    if (s.confounded) r.confounders = {x};
    d.records.push_back(std::move(r));
  }
  return d;
}

GaussHermite gauss_hermite(std::size_t points) {
  if (points == 0) throw Error(ErrorKind::InvalidArgument, "quadrature needs at least one node");
  const auto m = static_cast<Eigen::Index>(points);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k) / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite gh;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double v = solver.eigenvectors()(0, k);
    gh.nodes.push_back(solver.eigenvalues()(k));
    gh.weights.push_back(std::sqrt(M_PI) * v * v);
  }
  return gh;
}

namespace {

const GaussHermite& quadrature() {
  static const GaussHermite gh = gauss_hermite(96);
  return gh;
}

}  // namespace

double true_survival(const Scenario& s, double z, double t) {
  const double h = s.cumulative_baseline(t);
  if (h == 0.0) return 1.0;
  const double lp = s.effect(z);
  if (!s.confounded || s.alpha == 0.0) return std::exp(-h * std::exp(lp));
  const auto& gh = quadrature();
  double total = 0.0;
  for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
    const double x = s.confounder_mean + std::sqrt(2.0) * s.confounder_sd * gh.nodes[k];
    total += gh.weights[k] * std::exp(-h * std::exp(lp + s.alpha * x));
  }
  return total / std::sqrt(M_PI);
}

SurvivalSurface true_surface(const Scenario& s, std::span<const double> z_grid, std::span<const double> t_grid) {
  s.check();
  if (z_grid.empty() || t_grid.empty()) throw Error(ErrorKind::GridEmpty, "z and t grids must be non-empty");
  SurvivalSurface out;
  out.z_grid.assign(z_grid.begin(), z_grid.end());
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.values.resize(static_cast<Eigen::Index>(z_grid.size()), static_cast<Eigen::Index>(t_grid.size()));
  out.defined.setConstant(out.values.rows(), out.values.cols(), true);
  out.extrapolated.assign(z_grid.size(), false);
  out.estimand = "survival";
  out.model = "truth";
  out.adjusted = s.confounded;
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true_survival(s, z_grid[i], t_grid[j]);
    }
  }
  return out;
}

}  // namespace contsurv
