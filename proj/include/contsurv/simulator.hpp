#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "contsurv/dataset.hpp"
#include "contsurv/surface.hpp"

namespace contsurv {

enum class BaselineKind { Exponential, Weibull };

// Proportional-hazards data generator whose counterfactual survival surface is
// known in closed form (up to a one-dimensional Gaussian integral).
//   X ~ Normal(confounder_mean, confounder_sd)          (only when confounded)
//   Z ~ Normal(0, 1) + gamma * X
//   h(t | Z, X) = h0(t) exp(beta * Z + beta2 * Z^2 + alpha * X)
//   C ~ Exponential(censor_rate)                         (none when rate = 0)
struct Scenario {
  std::size_t n = 500;
  BaselineKind baseline = BaselineKind::Exponential;
  double rate = 0.1;            // exponential h0
  double weibull_shape = 1.0;   // H0(t) = (t / scale)^shape
  double weibull_scale = 10.0;
  double beta = -1.0;
  double beta2 = 0.0;
  bool confounded = false;
  double confounder_mean = 0.0;
  double confounder_sd = 1.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double censor_rate = 0.0;
  std::uint64_t seed = 1;

  void check() const;
  double cumulative_baseline(double t) const;
  double inverse_cumulative_baseline(double h) const;
  double effect(double z) const { return beta * z + beta2 * z * z; }
};

// Columns: time, status, exposure "z", confounder "x" (when confounded).
Dataset generate(const Scenario& s);

// E_X[exp(-H0(t) exp(effect(z) + alpha X))] by 96-node Gauss-Hermite quadrature.
double true_survival(const Scenario& s, double z, double t);
SurvivalSurface true_surface(const Scenario& s, std::span<const double> z_grid, std::span<const double> t_grid);

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight function exp(-x^2)
};

// Golub-Welsch nodes and weights.
GaussHermite gauss_hermite(std::size_t points);

// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();       // (0, 1)
  double normal();        // standard normal, Box-Muller
  double exponential();   // rate 1

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace contsurv
