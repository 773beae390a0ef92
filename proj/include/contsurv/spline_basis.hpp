#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace contsurv {

enum class BasisKind { Linear, Polynomial, BSpline, NaturalSpline, Categorical };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& text);

// Covariate transform for one variable. A spec is "resolved" once its knots,
// boundary and column count are fixed; only resolved specs can be evaluated.
struct BasisSpec {
  BasisKind kind = BasisKind::Linear;
  int degree = 3;                      // polynomial / B-spline degree
  int df = 0;                          // columns produced; 0 means "derive from knots"
  std::vector<double> knots;           // interior knots
  std::optional<std::array<double, 2>> boundary;
  std::vector<double> cutpoints;       // categorical only, ascending
  bool intercept = false;              // keep the first (intercept) column of a spline basis
  bool resolved = false;

  static BasisSpec linear();
  static BasisSpec polynomial(int degree);
  static BasisSpec bspline(int df, int degree = 3);
  static BasisSpec natural_spline(int df);
  static BasisSpec categorical(std::vector<double> cutpoints);

  // Number of design columns the spec produces once resolved.
  int columns() const;
};

struct BasisMatrix {
  Eigen::MatrixXd values;  // rows = observations, columns = basis functions
  std::vector<std::string> column_names;
  std::vector<bool> extrapolated;  // per row: x outside the boundary
};

// Fills in boundary knots (data range) and interior knots (equally spaced
// quantiles of x) for spline kinds; checks categorical cutpoints.
BasisSpec resolve_knots(std::span<const double> x, const BasisSpec& spec);

BasisMatrix evaluate(std::span<const double> x, const BasisSpec& spec, const std::string& name = "x");

// Single-row evaluation into `out` (size spec.columns()); returns true when
// x lies outside the boundary.
bool evaluate_row(double x, const BasisSpec& spec, std::span<double> out);

std::vector<std::string> basis_column_names(const BasisSpec& spec, const std::string& name);

// Treatment-coded indicators of the intervals (c0,c1], (c1,c2], ...; the
// first interval (which also admits x == c0) is the reference and is dropped.
BasisMatrix categorize(std::span<const double> x, std::span<const double> cutpoints, const std::string& name = "x");

// Index of the interval containing x, or nullopt outside (c0, c_last].
std::optional<std::size_t> interval_index(double x, std::span<const double> cutpoints);
std::vector<std::string> interval_labels(std::span<const double> cutpoints);

// Full B-spline basis (intercept included) on the clamped knot vector built
// from boundary and interior knots, via the Cox-de Boor recurrence.
std::vector<double> bspline_basis_full(double x, std::span<const double> interior, double lo, double hi, int degree);

// Type-7 (linear interpolation) sample quantile.
double quantile_type7(std::vector<double> values, double p);

}  // namespace contsurv
