#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "contsurv/spline_basis.hpp"
#include "helpers.hpp"

using namespace contsurv;

namespace {

std::vector<double> zero_to_hundred() {
  std::vector<double> x(101);
  std::iota(x.begin(), x.end(), 0.0);
  return x;
}

}  // namespace

TEST_CASE("knot resolution") {
  const auto x = zero_to_hundred();
  const auto a = resolve_knots(x, BasisSpec::bspline(3, 3));
  REQUIRE(a.boundary);
  CHECK((*a.boundary)[0] == 0.0);
  CHECK((*a.boundary)[1] == 100.0);
  CHECK(a.knots.empty());
  CHECK(a.columns() == 3);

  // median by sort-and-index
  auto shuffled = x;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(3));
  const auto b = resolve_knots(shuffled, BasisSpec::bspline(4, 3));
  auto sorted = shuffled;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(b.knots.size() == 1);
  CHECK(b.knots[0] == sorted[sorted.size() / 2]);
  CHECK(b.knots[0] == 50.0);

  const auto n = resolve_knots(x, BasisSpec::natural_spline(3));
  REQUIRE(n.knots.size() == 2);
  CHECK(n.knots[0] == doctest::Approx(100.0 / 3.0));
  CHECK(n.knots[1] == doctest::Approx(200.0 / 3.0));

  const std::vector<double> two = {1, 2, 1, 2, 1, 2};
  CHECK_KIND(resolve_knots(two, BasisSpec::bspline(3, 3)), TooFewDistinctValues);
  CHECK_KIND(resolve_knots(two, BasisSpec::natural_spline(3)), TooFewDistinctValues);
}

TEST_CASE("explicit knots are checked") {
  const auto x = zero_to_hundred();
  auto s = BasisSpec::bspline(0, 3);
  s.knots = {60, 40};
  CHECK_KIND(resolve_knots(x, s), InvalidArgument);
  s.knots = {40, 160};
  CHECK_KIND(resolve_knots(x, s), InvalidArgument);
  s.knots = {25, 75};
  const auto r = resolve_knots(x, s);
  CHECK(r.columns() == 5);
}

TEST_CASE("degree-0 B-spline is an indicator") {
  const std::vector<double> none;
  const auto full = bspline_basis_full(0.5, none, 0.0, 1.0, 0);
  REQUIRE(full.size() == 1);
  CHECK(full[0] == 1.0);
  const std::vector<double> mid = {0.5};
  const auto two = bspline_basis_full(0.25, mid, 0.0, 1.0, 0);
  CHECK(two == std::vector<double>{1.0, 0.0});
}

TEST_CASE("partition of unity and local support") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const std::vector<double> interior = {1.0, 2.5, 2.6, 7.0, 9.0};
  for (int degree = 1; degree <= 4; ++degree) {
    for (int k = 0; k < 500; ++k) {
      const double x = u(rng);
      const auto b = bspline_basis_full(x, interior, 0.0, 10.0, degree);
      CHECK(b.size() == interior.size() + degree + 1);
      double sum = 0.0;
      for (double v : b) {
        CHECK(v >= -1e-15);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    // basis function j lives on knot spans [t_j, t_{j+degree+1})
    std::vector<double> knots(degree + 1, 0.0);
    knots.insert(knots.end(), interior.begin(), interior.end());
    knots.insert(knots.end(), degree + 1, 10.0);
    for (int k = 0; k < 2000; ++k) {
      const double x = u(rng);
      const auto b = bspline_basis_full(x, interior, 0.0, 10.0, degree);
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (b[j] != 0.0) {
          CHECK(x >= knots[j]);
          CHECK(x <= knots[j + degree + 1]);
        }
      }
    }
  }
}

TEST_CASE("cubic B-spline evaluation drops the intercept and flags extrapolation") {
  const auto x = zero_to_hundred();
  const auto spec = resolve_knots(x, BasisSpec::bspline(4, 3));
  const std::vector<double> probe = {-10.0, 0.0, 37.0, 100.0, 130.0};
  const auto m = evaluate(probe, spec, "abi");
  CHECK(m.values.cols() == 4);
  CHECK(m.column_names == std::vector<std::string>{"bs(abi)1", "bs(abi)2", "bs(abi)3", "bs(abi)4"});
  CHECK(m.extrapolated == std::vector<bool>{true, false, false, false, true});
  const auto full = bspline_basis_full(37.0, spec.knots, 0.0, 100.0, 3);
  for (int j = 0; j < 4; ++j) CHECK(m.values(2, j) == full[static_cast<std::size_t>(j) + 1]);
  // clamped: the first probe evaluates like the boundary
  for (int j = 0; j < 4; ++j) CHECK(m.values(0, j) == m.values(1, j));
  for (int j = 0; j < 4; ++j) CHECK(std::isfinite(m.values(4, j)));
}

TEST_CASE("natural spline df=2 against a truncated-power hand evaluation") {
  const auto x = zero_to_hundred();
  const auto spec = resolve_knots(x, BasisSpec::natural_spline(2));
  REQUIRE(spec.knots.size() == 1);
  const double xi = spec.knots[0];
  CHECK(xi == 50.0);

  // by hand on u = x / 100, interior knot s = 0.5:
  //   N1 = u,  N2 = (u^3 - (u-1)^3_+) - ((u-s)^3_+ - (u-1)^3_+) / (1-s)
  // lower boundary: both zero. upper boundary: N1 = 1, N2 = 1 - (1-s)^2 = 0.75
  const std::vector<double> ends = {0.0, 100.0};
  const auto m = evaluate(ends, spec, "z");
  REQUIRE(m.values.cols() == 2);
  CHECK(m.values(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m.values(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m.values(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.values(1, 1) == doctest::Approx(0.75).epsilon(1e-14));

  // every column lies in the span of the constrained truncated-power basis
  // {1, x, x^2, x^3, (x-xi)^3_+} with f''(lo) = f''(hi) = 0 eliminated:
  //   c = -3 d lo,  e = -d (hi - lo) / (hi - xi)   ->  basis {1, x, g(x)}
  const double lo = 0.0, hi = 100.0;
  auto g = [&](double v) {
    const double tp = std::max(v - xi, 0.0);
    return -3.0 * lo * v * v + v * v * v - (hi - lo) / (hi - xi) * tp * tp * tp;
  };
  std::vector<double> pts;
  for (double v = 0.0; v <= 100.0; v += 2.5) pts.push_back(v);
  const auto mm = evaluate(pts, spec, "z");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = 1.0;
    a(static_cast<Eigen::Index>(i), 1) = pts[i] / 100.0;
    a(static_cast<Eigen::Index>(i), 2) = g(pts[i]) / 1e6;
  }
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd col = mm.values.col(j);
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(col);
    CHECK((a * coef - col).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("natural spline is linear beyond the boundary") {
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.push_back(std::pow(i, 1.3));
  const auto spec = resolve_knots(x, BasisSpec::natural_spline(4));
  const double hi = (*spec.boundary)[1], lo = (*spec.boundary)[0];
  const std::vector<double> right = {hi, hi + 5.0, hi + 10.0, hi + 40.0};
  const std::vector<double> left = {lo - 40.0, lo - 10.0, lo - 5.0, lo};
  for (const auto* side : {&right, &left}) {
    const auto m = evaluate(*side, spec, "z");
    for (int j = 0; j < m.values.cols(); ++j) {
      const double s1 = (m.values(1, j) - m.values(0, j)) / ((*side)[1] - (*side)[0]);
      const double s2 = (m.values(2, j) - m.values(1, j)) / ((*side)[2] - (*side)[1]);
      const double s3 = (m.values(3, j) - m.values(2, j)) / ((*side)[3] - (*side)[2]);
      CHECK(s2 == doctest::Approx(s1).epsilon(1e-9));
      CHECK(s3 == doctest::Approx(s1).epsilon(1e-9));
    }
  }
}

TEST_CASE("polynomial and linear bases") {
  const std::vector<double> x = {-1.0, 2.0, 3.0, 0.5};
  const auto p = resolve_knots(x, BasisSpec::polynomial(3));
  const auto m = evaluate(x, p, "z");
  CHECK(m.column_names == std::vector<std::string>{"z", "z^2", "z^3"});
  CHECK(m.values(1, 2) == 8.0);
  CHECK(m.values(0, 1) == 1.0);
  const auto l = evaluate(x, resolve_knots(x, BasisSpec::linear()), "z");
  CHECK(l.values.cols() == 1);
  CHECK(l.values(2, 0) == 3.0);
}

TEST_CASE("categorize uses (lo, hi] intervals with the first as reference") {
  const std::vector<double> cuts = {0.35, 0.5, 0.7, 0.9, 1.1, 1.5};
  const auto labels = interval_labels(cuts);
  CHECK(labels == std::vector<std::string>{"(0.35,0.5]", "(0.5,0.7]", "(0.7,0.9]", "(0.9,1.1]", "(1.1,1.5]"});

  const std::vector<double> x = {0.6};
  const auto m = categorize(x, cuts, "ABI");
  REQUIRE(m.values.cols() == 4);
  CHECK(m.column_names[0] == "ABI (0.5,0.7]");
  CHECK(m.values(0, 0) == 1.0);
  CHECK(m.values.row(0).sum() == 1.0);

  const std::vector<double> ref = {0.5};
  CHECK(categorize(ref, cuts).values.row(0).sum() == 0.0);
  const std::vector<double> upper = {0.7};
  CHECK(categorize(upper, cuts).values(0, 0) == 1.0);

  const std::vector<double> outside = {1.6};
  CHECK_KIND(categorize(outside, cuts), ValueOutsideAllIntervals);
  const std::vector<double> below = {0.1};
  CHECK_KIND(categorize(below, cuts), ValueOutsideAllIntervals);
  const std::vector<double> unsorted = {0.5, 0.35};
  CHECK_KIND(categorize(x, unsorted), InvalidArgument);
}

TEST_CASE("unresolved specs are refused") {
  const std::vector<double> x = {1.0, 2.0};
  CHECK_KIND(evaluate(x, BasisSpec::bspline(4, 3)), UnresolvedSpec);
}

TEST_CASE("evaluation is order independent") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  std::vector<double> x(60);
  for (auto& v : x) v = n(rng);
  for (auto base : {BasisSpec::bspline(5, 3), BasisSpec::natural_spline(4), BasisSpec::polynomial(2)}) {
    const auto spec = resolve_knots(x, base);
    const auto a = evaluate(x, spec);
    std::vector<double> rev(x.rbegin(), x.rend());
    const auto b = evaluate(rev, spec);
    for (Eigen::Index i = 0; i < a.values.rows(); ++i) {
      CHECK(a.values.row(i) == b.values.row(a.values.rows() - 1 - i));
    }
  }
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v = {4, 1, 3, 2};
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 4.0);
  CHECK(quantile_type7(v, 0.5) == 2.5);
  CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("basis kind names") {
  for (auto k : {BasisKind::Linear, BasisKind::Polynomial, BasisKind::BSpline, BasisKind::NaturalSpline,
                 BasisKind::Categorical}) {
    CHECK(basis_kind_from_string(to_string(k)) == k);
  }
  CHECK(basis_kind_from_string("bs") == BasisKind::BSpline);
  CHECK_KIND(basis_kind_from_string("loess"), InvalidArgument);
}
