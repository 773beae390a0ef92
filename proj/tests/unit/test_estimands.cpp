#include <cmath>
#include <random>
#include <sstream>

#include "contsurv/cox_ph.hpp"
#include "contsurv/estimands.hpp"
#include "contsurv/gcomp.hpp"
#include "contsurv/kaplan_meier.hpp"
#include "helpers.hpp"

using namespace contsurv;

namespace {

Surface make_surface(const std::vector<double>& z, const std::vector<double>& t,
                     const std::vector<std::vector<double>>& rows) {
  Surface s;
  s.z_grid = z;
  s.t_grid = t;
  s.values.resize(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  s.defined.setConstant(s.values.rows(), s.values.cols(), true);
  s.extrapolated.assign(z.size(), false);
  return s;
}

// Random survival surface: each row a non-increasing step sequence from 1.
Surface random_surface(std::mt19937_64& rng, std::size_t nz, std::size_t nt) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z(nz), t(nt);
  for (std::size_t i = 0; i < nz; ++i) z[i] = static_cast<double>(i) * 0.1;
  t[0] = 0.0;
  for (std::size_t j = 1; j < nt; ++j) t[j] = t[j - 1] + 0.01 + u(rng);
  std::vector<std::vector<double>> rows(nz, std::vector<double>(nt));
  for (auto& r : rows) {
    r[0] = 1.0;
    for (std::size_t j = 1; j < nt; ++j) r[j] = r[j - 1] * (u(rng) < 0.3 ? 1.0 : u(rng));
  }
  return make_surface(z, t, rows);
}

std::vector<double> landmark_row(const Surface& s, std::size_t i) {
  std::vector<double> out(s.nt());
  for (std::size_t j = 0; j < s.nt(); ++j) out[j] = s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace

TEST_CASE("landmark") {
  const auto s = make_surface({0.0, 1.0}, {0.0, 2.0, 4.0}, {{1.0, 0.5, 0.2}, {1.0, 0.8, 0.6}});
  for (const auto& v : landmark(s, 0.0)) CHECK(v.value == 1.0);
  const auto late = landmark(s, 100.0);
  CHECK(late[0].value == 0.2);
  CHECK(late[1].value == 0.6);
  const auto mid = landmark(s, 3.0);
  CHECK(mid[0].value == 0.5);
  CHECK(mid[1].z == 1.0);
  CHECK_KIND(landmark(s, -1.0), InvalidArgument);
}

TEST_CASE("landmark reproduces the surface columns") {
  std::mt19937_64 rng(3);
  const auto s = random_surface(rng, 6, 20);
  for (std::size_t j = 0; j < s.nt(); ++j) {
    const auto col = landmark(s, s.t_grid[j]);
    for (std::size_t i = 0; i < s.nz(); ++i) {
      CHECK(col[i].value == s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
}

TEST_CASE("quantiles") {
  const auto s = make_surface({0.0}, {0.0, 2.0}, {{1.0, 0.5}});
  const auto q = quantile_curve(s, 0.5);
  CHECK(q[0].defined);
  CHECK(q[0].value == 2.0);
  const auto never = quantile_curve(s, 0.4);
  CHECK(!never[0].defined);

  const auto high = make_surface({0.0}, {0.0, 1.0, 3.0}, {{1.0, 0.9995, 0.99}});
  const auto q999 = quantile_curve(high, 0.999);
  CHECK(q999[0].value == 3.0);
  CHECK_KIND(quantile_curve(s, 0.0), InvalidArgument);
  CHECK_KIND(quantile_curve(s, 1.0), InvalidArgument);
}

TEST_CASE("RMST") {
  const auto s = make_surface({0.0}, {0.0, 2.0, 4.0}, {{1.0, 0.5, 0.5}});
  CHECK(rmst_curve(s, 4.0)[0].value == 3.0);
  CHECK(rmst_curve(s, 3.0)[0].value == 2.5);
  const auto ones = make_surface({0.0, 1.0}, {0.0, 1.0, 5.0}, {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}});
  for (double lambda : {0.3, 1.0, 2.7, 5.0}) {
    for (const auto& v : rmst_curve(ones, lambda)) CHECK(std::abs(v.value - lambda) <= 1e-12);
  }
  CHECK_KIND(rmst_curve(s, 0.0), InvalidArgument);
  CHECK_KIND(rmst_curve(s, 4.5), LambdaBeyondGrid);
}

TEST_CASE("estimand properties on random surfaces") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = random_surface(rng, 5, 30);
    // Q non-increasing in p (where defined)
    double prev_p = 0.02;
    auto prev = quantile_curve(s, prev_p);
    for (double p = 0.05; p < 1.0; p += 0.05) {
      const auto q = quantile_curve(s, p);
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (prev[i].defined) {
          CHECK(q[i].defined);
          CHECK(q[i].value <= prev[i].value);
        }
      }
      prev = q;
      prev_p = p;
    }
    // RMST non-decreasing in lambda and <= lambda
    double last = 0.0;
    for (double lambda = 0.05; lambda <= s.t_grid.back(); lambda += 0.37) {
      const auto r = rmst_curve(s, lambda);
      CHECK(r[2].value >= last - 1e-12);
      for (const auto& v : r) CHECK(v.value <= lambda + 1e-12);
      last = r[2].value;
    }
  }
}

TEST_CASE("contrasts against the observed KM curve") {
  const auto s = make_surface({0.0, 1.0}, {0.0, 2.0, 4.0}, {{1.0, 0.5, 0.0}, {1.0, 0.8, 0.6}});
  const StepFunction km({2.0, 4.0}, {0.7, 0.3}, 1.0);
  const auto diff = contrast_surface(s, ContrastSpec::observed_km(ContrastKind::Difference), km);
  CHECK(diff.estimand == "difference_km");
  CHECK(diff.values(0, 1) == doctest::Approx(0.2));
  CHECK(diff.values(1, 2) == doctest::Approx(-0.3));
  const auto ratio = contrast_surface(s, ContrastSpec::observed_km(ContrastKind::Ratio), km);
  CHECK(ratio.values(1, 1) == doctest::Approx(0.7 / 0.8));
  CHECK(!ratio.defined(0, 2));
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(diff.values(i, 0) == 0.0);
    CHECK(ratio.values(i, 0) == 1.0);
  }
  CHECK_KIND(contrast_surface(s, ContrastSpec::observed_km(ContrastKind::Difference), std::nullopt), MissingKMReference);
  CHECK_KIND(contrast_surface(s, ContrastSpec::fixed(ContrastKind::Difference, 0.5), km), InvalidArgument);
}

TEST_CASE("fixed-reference contrasts use a dedicated evaluation") {
  const auto d = testing::random_dataset(120, 1, 55);
  const CoxFit fit = fit_cox(d, Design::standard(d, BasisSpec::natural_spline(3)));
  const auto g = default_grids(d, 11);
  const auto s = counterfactual_surface(fit, d, g.z, g.t);

  // tau on a grid point: self-reference gives exactly 0 and 1
  const double tau = g.z[4];
  const auto delta = contrast_surface(s, ContrastSpec::fixed(ContrastKind::Difference, tau), fit, d);
  const auto phi = contrast_surface(s, ContrastSpec::fixed(ContrastKind::Ratio, tau), fit, d);
  for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
    CHECK(delta.values(4, j) == 0.0);
    CHECK(phi.values(4, j) == 1.0);
  }

  // tau between grid points: reference equals a direct g-computation curve
  const double mid = 0.5 * (g.z[2] + g.z[3]);
  const auto ref = counterfactual_curve(fit, d, mid, g.t);
  const auto c = contrast_surface(s, ContrastSpec::fixed(ContrastKind::Difference, mid), fit, d);
  for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
    CHECK(c.values(6, j) == ref[static_cast<std::size_t>(j)] - s.values(6, j));
  }
  CHECK_KIND(contrast_surface(s, ContrastSpec::fixed(ContrastKind::Ratio, g.z.back() + 1.0), fit, d), InvalidArgument);

  // antisymmetry and reciprocity when computed from the same surface
  for (std::size_t a = 0; a < s.nz(); a += 3) {
    for (std::size_t b = 0; b < s.nz(); b += 4) {
      const auto ra = contrast_with_reference(s, ContrastKind::Difference, landmark_row(s, a), "d");
      const auto rb = contrast_with_reference(s, ContrastKind::Difference, landmark_row(s, b), "d");
      const auto pa = contrast_with_reference(s, ContrastKind::Ratio, landmark_row(s, a), "r");
      const auto pb = contrast_with_reference(s, ContrastKind::Ratio, landmark_row(s, b), "r");
      for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        CHECK(std::abs(ra.values(ib, j) + rb.values(ia, j)) <= 1e-12);
        if (pa.defined(ib, j) && pb.defined(ia, j)) CHECK(std::abs(pa.values(ib, j) * pb.values(ia, j) - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("estimand csv") {
  const auto s = make_surface({0.0}, {0.0, 2.0}, {{1.0, 0.5}});
  std::ostringstream out;
  write_estimand_csv(quantile_curve(s, 0.3), "quantile", out);
  CHECK(out.str() == "z,t,value,defined,estimand\n0,NA,NA,0,quantile\n");
}
