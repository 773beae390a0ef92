#pragma once

#include <span>
#include <vector>

#include "contsurv/cox_ph.hpp"
#include "contsurv/dataset.hpp"
#include "contsurv/surface.hpp"

namespace contsurv {

struct Grids {
  std::vector<double> z;
  std::vector<double> t;
};

// z: `z_points` equally spaced values over the observed exposure range;
// t: {0} plus every distinct event time (the only places S_z can change).
Grids default_grids(const Dataset& d, std::size_t z_points = 100);

std::vector<double> linspace(double lo, double hi, std::size_t points);

// Regression standardization: for every z, set the exposure of every record to
// z, keep its confounders, and average the model's conditional survival
// predictions with compensated summation in record order. Rows are
// independent, so `threads` only changes the schedule, never the values.
SurvivalSurface counterfactual_surface(const CoxFit& fit, const Dataset& d, std::span<const double> z_grid,
                                       std::span<const double> t_grid, unsigned threads = 1);

// A single row of the surface, computed by the same routine.
std::vector<double> counterfactual_curve(const CoxFit& fit, const Dataset& d, double z,
                                         std::span<const double> t_grid);

}  // namespace contsurv
