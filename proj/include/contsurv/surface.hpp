#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace contsurv {

// Values over an (exposure grid x time grid) lattice. Rows follow z_grid,
// columns follow t_grid. Holds the counterfactual survival surface as well as
// contrast surfaces derived from it; `estimand` tells them apart.
struct Surface {
  std::vector<double> z_grid;  // ascending
  std::vector<double> t_grid;  // ascending, starts at 0
  Eigen::MatrixXd values;
  // Cells without a defined value (e.g. ratios with a zero denominator).
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
  std::vector<bool> extrapolated;  // per z: outside the observed exposure range
  std::string estimand = "survival";
  std::string model;
  bool adjusted = false;

  std::size_t nz() const { return z_grid.size(); }
  std::size_t nt() const { return t_grid.size(); }
  bool is_survival() const { return estimand == "survival"; }

  // Step-function value of row zi at time t (right-continuous in t).
  double value_at(std::size_t zi, double t) const;
  bool defined_at(std::size_t zi, double t) const;
  std::size_t time_index(double t) const;  // index of the largest grid time <= t

  // Throws InconsistentGrid when shapes or orderings disagree.
  void check() const;
};

using SurvivalSurface = Surface;
using ContrastSurface = Surface;

// Long format, z-major: z,t,survival,extrapolated for survival surfaces and
// z,t,value,extrapolated,estimand for everything else (NA marks undefined).
void write_surface_csv(const Surface& s, std::ostream& out);
void save_surface_csv(const Surface& s, const std::string& path);
Surface read_surface_csv(std::istream& in);
Surface load_surface_csv(const std::string& path);

}  // namespace contsurv
