#include "contsurv/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"

namespace contsurv {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Linear: return "linear";
    case BasisKind::Polynomial: return "polynomial";
    case BasisKind::BSpline: return "bspline";
    case BasisKind::NaturalSpline: return "natural_spline";
    case BasisKind::Categorical: return "categorical";
  }
  return "linear";
}

BasisKind basis_kind_from_string(const std::string& text) {
  if (text == "linear") return BasisKind::Linear;
  if (text == "polynomial" || text == "poly") return BasisKind::Polynomial;
  if (text == "bspline" || text == "bs") return BasisKind::BSpline;
  if (text == "natural_spline" || text == "ns") return BasisKind::NaturalSpline;
  if (text == "categorical") return BasisKind::Categorical;
  throw Error(ErrorKind::InvalidArgument, "unknown basis kind '" + text + "'");
}

BasisSpec BasisSpec::linear() {
  BasisSpec s;
  s.kind = BasisKind::Linear;
  s.degree = 1;
  s.df = 1;
  return s;
}

BasisSpec BasisSpec::polynomial(int degree) {
  BasisSpec s;
  s.kind = BasisKind::Polynomial;
  s.degree = degree;
  s.df = degree;
  return s;
}

BasisSpec BasisSpec::bspline(int df, int degree) {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.degree = degree;
  s.df = df;
  return s;
}

BasisSpec BasisSpec::natural_spline(int df) {
  BasisSpec s;
  s.kind = BasisKind::NaturalSpline;
  s.degree = 3;
  s.df = df;
  return s;
}

BasisSpec BasisSpec::categorical(std::vector<double> cutpoints) {
  BasisSpec s;
  s.kind = BasisKind::Categorical;
  s.cutpoints = std::move(cutpoints);
  s.df = static_cast<int>(s.cutpoints.size()) - 2;
  return s;
}

int BasisSpec::columns() const {
  switch (kind) {
    case BasisKind::Linear: return 1;
    case BasisKind::Polynomial: return degree;
    case BasisKind::BSpline:
      return static_cast<int>(knots.size()) + degree + (intercept ? 1 : 0);
    case BasisKind::NaturalSpline:
      return static_cast<int>(knots.size()) + 1 + (intercept ? 1 : 0);
    case BasisKind::Categorical:
      return std::max(0, static_cast<int>(cutpoints.size()) - 2);
  }
  return 0;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

void check_ascending(std::span<const double> v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) throw Error(ErrorKind::InvalidArgument, fmt::format("{} must be strictly ascending", what));
  }
}

}  // namespace

BasisSpec resolve_knots(std::span<const double> x, const BasisSpec& spec) {
  BasisSpec out = spec;
  if (spec.kind == BasisKind::Categorical) {
    if (spec.cutpoints.size() < 2) throw Error(ErrorKind::InvalidArgument, "categorical basis needs >= 2 cutpoints");
    check_ascending(spec.cutpoints, "cutpoints");
    out.df = out.columns();
    out.resolved = true;
    return out;
  }
  if (spec.kind == BasisKind::Polynomial && spec.degree < 1) {
    throw Error(ErrorKind::InvalidArgument, "polynomial degree must be >= 1");
  }
  if (spec.kind == BasisKind::BSpline && spec.degree < 0) {
    throw Error(ErrorKind::InvalidArgument, "B-spline degree must be >= 0");
  }
  if (x.empty()) throw Error(ErrorKind::TooFewDistinctValues, "no data");

  const std::set<double> distinct(x.begin(), x.end());
  double lo = *distinct.begin();
  double hi = *distinct.rbegin();
  if (spec.boundary) {
    lo = (*spec.boundary)[0];
    hi = (*spec.boundary)[1];
    if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "boundary must satisfy lo < hi");
  }
  out.boundary = std::array<double, 2>{lo, hi};

  int n_interior = 0;
  if (spec.kind == BasisKind::BSpline || spec.kind == BasisKind::NaturalSpline) {
    if (!spec.knots.empty()) {
      check_ascending(spec.knots, "knots");
      if (spec.knots.front() <= lo || spec.knots.back() >= hi) {
        throw Error(ErrorKind::InvalidArgument, "interior knots must lie strictly inside the boundary");
      }
      n_interior = static_cast<int>(spec.knots.size());
    } else {
      const int icpt = spec.intercept ? 1 : 0;
      if (spec.kind == BasisKind::BSpline) {
        if (spec.df < spec.degree + icpt) {
          throw Error(ErrorKind::InvalidArgument,
                      fmt::format("B-spline df {} is below degree {}", spec.df, spec.degree));
        }
        n_interior = spec.df - spec.degree - icpt;
      } else {
        if (spec.df < 1 + icpt) throw Error(ErrorKind::InvalidArgument, "natural spline df too small");
        n_interior = spec.df - 1 - icpt;
      }
      std::vector<double> inside;
      for (double v : x) {
        if (v >= lo && v <= hi) inside.push_back(v);
      }
      out.knots.clear();
      for (int k = 1; k <= n_interior; ++k) {
        out.knots.push_back(quantile_type7(inside, static_cast<double>(k) / (n_interior + 1)));
      }
    }
  }
  out.df = out.columns();
  if (static_cast<int>(distinct.size()) < out.df + 1) {
    throw Error(ErrorKind::TooFewDistinctValues,
                fmt::format("{} distinct values cannot support {} basis columns", distinct.size(), out.df));
  }
  if (!out.knots.empty()) {
    for (std::size_t k = 1; k < out.knots.size(); ++k) {
      if (!(out.knots[k] > out.knots[k - 1])) {
        throw Error(ErrorKind::TooFewDistinctValues, "quantile knots are tied; reduce df");
      }
    }
    if (out.knots.front() <= lo || out.knots.back() >= hi) {
      throw Error(ErrorKind::TooFewDistinctValues, "quantile knots coincide with the boundary; reduce df");
    }
  }
  out.resolved = true;
  return out;
}

std::vector<double> bspline_basis_full(double x, std::span<const double> interior, double lo, double hi, int degree) {
  const int p = degree;
  std::vector<double> aug;
  aug.reserve(interior.size() + 2 * static_cast<std::size_t>(p + 1));
  for (int i = 0; i <= p; ++i) aug.push_back(lo);
  aug.insert(aug.end(), interior.begin(), interior.end());
  for (int i = 0; i <= p; ++i) aug.push_back(hi);

  const int n_basis = static_cast<int>(interior.size()) + p + 1;
  std::vector<double> basis(static_cast<std::size_t>(n_basis), 0.0);
  const double xc = std::clamp(x, lo, hi);

  int span = n_basis - 1;
  if (xc < hi) {
    auto it = std::upper_bound(aug.begin(), aug.end(), xc);
    span = std::max(p, static_cast<int>(it - aug.begin()) - 1);
  }

  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
  std::vector<double> nz(static_cast<std::size_t>(p + 1), 0.0);
  nz[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = xc - aug[span + 1 - j];
    right[j] = aug[span + j] - xc;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? nz[r] / denom : 0.0;
      nz[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    nz[j] = saved;
  }
  for (int r = 0; r <= p; ++r) basis[static_cast<std::size_t>(span - p + r)] = nz[r];
  return basis;
}

namespace {

double natural_d(double u, double knot_k, double knot_last) {
  auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  return (cube_plus(u - knot_k) - cube_plus(u - knot_last)) / (knot_last - knot_k);
}

}  // namespace

std::optional<std::size_t> interval_index(double x, std::span<const double> cutpoints) {
  if (cutpoints.size() < 2) return std::nullopt;
  if (x < cutpoints.front() || x > cutpoints.back()) return std::nullopt;
  if (x == cutpoints.front()) return 0;
  // first cutpoint >= x closes the interval (c_{k-1}, c_k]
  auto it = std::lower_bound(cutpoints.begin(), cutpoints.end(), x);
  return static_cast<std::size_t>(it - cutpoints.begin()) - 1;
}

std::vector<std::string> interval_labels(std::span<const double> cutpoints) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k < cutpoints.size(); ++k) {
    out.push_back(fmt::format("({},{}]", csv::format_double(cutpoints[k - 1]), csv::format_double(cutpoints[k])));
  }
  return out;
}

bool evaluate_row(double x, const BasisSpec& spec, std::span<double> out) {
  if (!spec.resolved) throw Error(ErrorKind::UnresolvedSpec, "basis spec must be resolved before evaluation");
  const auto ncol = static_cast<std::size_t>(spec.columns());
  if (out.size() != ncol) throw Error(ErrorKind::ArityMismatch, "output row has the wrong width");

  bool outside = false;
  if (spec.boundary) outside = x < (*spec.boundary)[0] || x > (*spec.boundary)[1];

  switch (spec.kind) {
    case BasisKind::Linear:
      out[0] = x;
      break;
    case BasisKind::Polynomial: {
      double power = 1.0;
      for (std::size_t j = 0; j < ncol; ++j) {
        power *= x;
        out[j] = power;
      }
      break;
    }
    case BasisKind::BSpline: {
      const auto [lo, hi] = *spec.boundary;
      auto full = bspline_basis_full(x, spec.knots, lo, hi, spec.degree);
      const std::size_t skip = spec.intercept ? 0 : 1;
      for (std::size_t j = 0; j < ncol; ++j) out[j] = full[j + skip];
      break;
    }
    case BasisKind::NaturalSpline: {
      const auto [lo, hi] = *spec.boundary;
      const double width = hi - lo;
      const double u = (x - lo) / width;
      std::vector<double> xi;
      xi.push_back(0.0);
      for (double k : spec.knots) xi.push_back((k - lo) / width);
      xi.push_back(1.0);
      const std::size_t K = xi.size();
      std::size_t j = 0;
      if (spec.intercept) out[j++] = 1.0;
      out[j++] = u;
      const double d_penultimate = natural_d(u, xi[K - 2], xi[K - 1]);
      for (std::size_t k = 0; k + 2 < K; ++k) out[j++] = natural_d(u, xi[k], xi[K - 1]) - d_penultimate;
      break;
    }
    case BasisKind::Categorical: {
      auto idx = interval_index(x, spec.cutpoints);
      if (!idx) throw Error(ErrorKind::ValueOutsideAllIntervals, fmt::format("value {} is outside every interval", x));
      std::fill(out.begin(), out.end(), 0.0);
      if (*idx > 0) out[*idx - 1] = 1.0;
      outside = false;
      break;
    }
  }
  return outside;
}

std::vector<std::string> basis_column_names(const BasisSpec& spec, const std::string& name) {
  std::vector<std::string> names;
  const int ncol = spec.columns();
  switch (spec.kind) {
    case BasisKind::Linear:
      names.push_back(name);
      break;
    case BasisKind::Polynomial:
      for (int j = 1; j <= ncol; ++j) names.push_back(j == 1 ? name : fmt::format("{}^{}", name, j));
      break;
    case BasisKind::BSpline:
      for (int j = 1; j <= ncol; ++j) names.push_back(fmt::format("bs({}){}", name, j));
      break;
    case BasisKind::NaturalSpline:
      for (int j = 1; j <= ncol; ++j) names.push_back(fmt::format("ns({}){}", name, j));
      break;
    case BasisKind::Categorical: {
      auto labels = interval_labels(spec.cutpoints);
      for (std::size_t k = 1; k < labels.size(); ++k) names.push_back(name + " " + labels[k]);
      break;
    }
  }
  return names;
}

BasisMatrix evaluate(std::span<const double> x, const BasisSpec& spec, const std::string& name) {
  if (!spec.resolved) throw Error(ErrorKind::UnresolvedSpec, "basis spec must be resolved before evaluation");
  const auto ncol = static_cast<Eigen::Index>(spec.columns());
  BasisMatrix m;
  m.values.resize(static_cast<Eigen::Index>(x.size()), ncol);
  m.column_names = basis_column_names(spec, name);
  m.extrapolated.resize(x.size());
  std::vector<double> row(static_cast<std::size_t>(ncol));
  for (std::size_t i = 0; i < x.size(); ++i) {
    try {
      m.extrapolated[i] = evaluate_row(x[i], spec, row);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ValueOutsideAllIntervals) {
        throw Error(ErrorKind::ValueOutsideAllIntervals, fmt::format("row {}: value {} is outside every interval", i, x[i]));
      }
      throw;
    }
    for (Eigen::Index j = 0; j < ncol; ++j) m.values(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

BasisMatrix categorize(std::span<const double> x, std::span<const double> cutpoints, const std::string& name) {
  auto spec = BasisSpec::categorical(std::vector<double>(cutpoints.begin(), cutpoints.end()));
  spec = resolve_knots(x, spec);
  return evaluate(x, spec, name);
}

}  // namespace contsurv
