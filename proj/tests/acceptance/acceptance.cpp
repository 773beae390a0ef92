// One line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "../unit/render_helpers.hpp"
#include "contsurv/cox_ph.hpp"
#include "contsurv/diagnostics.hpp"
#include "contsurv/error.hpp"
#include "contsurv/estimands.hpp"
#include "contsurv/gcomp.hpp"
#include "contsurv/kaplan_meier.hpp"
#include "contsurv/render.hpp"
#include "contsurv/resampling.hpp"
#include "contsurv/simulator.hpp"

using namespace contsurv;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  fmt::print("{} {:>2} {:<22} {} [{:.2f}s]\n", ok ? "PASS" : "FAIL", id, name, detail, seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double sup_error(const Surface& a, const Surface& b) {
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

void run(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = Clock::now();
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail, since(t0));
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what(), since(t0));
  }
}

Dataset four_subjects() {
  Dataset d;
  d.exposure_name = "z";
  d.records = {{1, 1, 1, {}}, {2, 1, 0, {}}, {3, 1, 1, {}}, {4, 0, 0, {}}};
  return d;
}

Surface random_surface(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Surface s;
  const int nz = size(rng), nt = size(rng);
  double z = -1.0, t = 0.0;
  for (int i = 0; i < nz; ++i) s.z_grid.push_back(z += 0.01 + u(rng));
  for (int j = 0; j < nt; ++j) s.t_grid.push_back(j == 0 ? 0.0 : (t += 0.01 + u(rng)));
  s.values.resize(nz, nt);
  for (int i = 0; i < nz; ++i) {
    double v = 1.0;
    for (int j = 0; j < nt; ++j) {
      if (j > 0) v *= u(rng) < 0.3 ? 1.0 : u(rng);
      s.values(i, j) = v;
    }
  }
  s.defined.setConstant(nz, nt, true);
  s.extrapolated.assign(static_cast<std::size_t>(nz), false);
  return s;
}

std::vector<double> v_values(const std::string& d) {
  std::vector<double> out;
  std::istringstream in(d);
  std::string tok;
  while (in >> tok) {
    if (tok[0] == 'V') out.push_back(std::stod(tok.substr(1)));
  }
  return out;
}

}  // namespace

int main() {
  fmt::print("contsurv acceptance\n");

  run(1, "cox_oracle", [] {
    const auto d = four_subjects();
    const auto t0 = Clock::now();
    const CoxFit fit = fit_cox(d, Design::standard(d));
    const double secs = since(t0);
    const double b = fit.coefficients(0);
    const double target = std::log((1.0 + std::sqrt(17.0)) / 2.0);
    const double u = std::exp(b);
    const double score = (1.0 - 2 * u / (2 * u + 2)) + (0.0 - u / (u + 2)) + (1.0 - u / (u + 1));
    const bool ok = std::abs(b - target) < 1e-6 && std::abs(score) < 1e-6 && secs < 1.0;
    return std::pair{ok, fmt::format("beta={:.10f} target={:.10f} |U|={:.2e} fit={:.4f}s", b, target, std::abs(score), secs)};
  });

  run(2, "km_oracle", [] {
    const std::vector<double> t = {1, 2, 3};
    const std::vector<int> s = {1, 0, 1};
    const auto km = kaplan_meier(t, s);
    const bool ok = km(1.0) == 2.0 / 3.0 && km(3.0) == 0.0;
    return std::pair{ok, fmt::format("S(1)={:.17g} S(3)={}", km(1.0), km(3.0))};
  });

  run(3, "surface_oracle", [] {
    Scenario sc;
    sc.n = 2000;
    sc.rate = 0.1;
    sc.beta = -1.0;
    sc.seed = 20240301;
    const auto d = generate(sc);
    const auto t0 = Clock::now();
    const CoxFit fit = fit_cox(d, Design::standard(d));
    const auto g = default_grids(d, 100);
    const auto s = counterfactual_surface(fit, d, g.z, g.t, 1);
    const double secs = since(t0);
    const auto truth = true_surface(sc, g.z, g.t);
    const double err = sup_error(s, truth);
    // for context only: the same norm away from the exposure extremes and the last 5% of times
    auto zs = d.exposures();
    auto ts = d.times();
    std::sort(zs.begin(), zs.end());
    std::sort(ts.begin(), ts.end());
    const double zlo = zs[zs.size() / 20], zhi = zs[zs.size() - 1 - zs.size() / 20], thi = ts[ts.size() - 1 - ts.size() / 20];
    double central = 0.0;
    for (std::size_t i = 0; i < s.nz(); ++i)
      for (std::size_t j = 0; j < s.nt(); ++j)
        if (g.z[i] >= zlo && g.z[i] <= zhi && g.t[j] <= thi)
          central = std::max(central, std::abs(s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                               truth.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    return std::pair{err < 0.03 && secs < 60.0,
                     fmt::format("sup|S-S0|={:.4f} (<0.03) grid={}x{} {:.2f}s (<60); central 90% z, t<=q95: {:.4f}", err,
                                 s.nz(), s.nt(), secs, central)};
  });

  run(4, "confounding", [] {
    Scenario sc;
    sc.n = 2000;
    sc.confounded = true;
    sc.gamma = 0.8;
    sc.alpha = 0.7;
    sc.seed = 77;
    const auto d = generate(sc);
    const auto t0 = Clock::now();
    const CoxFit adj = fit_cox(d, Design::standard(d, BasisSpec::linear(), true));
    const CoxFit unadj = fit_cox(d, Design::standard(d, BasisSpec::linear(), false));
    const auto g = default_grids(d, 100);
    const auto truth = true_surface(sc, g.z, g.t);
    const double e_adj = sup_error(counterfactual_surface(adj, d, g.z, g.t), truth);
    const double e_unadj = sup_error(counterfactual_surface(unadj, d, g.z, g.t), truth);
    const double secs = since(t0);
    return std::pair{e_unadj >= 2.0 * e_adj && secs < 180.0,
                     fmt::format("unadjusted={:.4f} adjusted={:.4f} ratio={:.2f} (>=2) {:.2f}s (<180)", e_unadj, e_adj,
                                 e_unadj / e_adj, secs)};
  });

  run(5, "bootstrap_coverage", [] {
    const double z0 = 0.5, t_star = 5.0;
    Scenario sc;
    sc.n = 200;
    sc.censor_rate = 0.05;
    const double truth = true_survival(sc, z0, t_star);
    const std::vector<double> tg = {0.0, t_star};
    const ScalarPipeline pipeline = [&](const Dataset& d) {
      const CoxFit fit = fit_cox(d, Design::standard(d));
      return counterfactual_curve(fit, d, z0, tg)[1];
    };
    auto one = [&](int i, unsigned threads) {
      sc.seed = 5000 + static_cast<std::uint64_t>(i);
      const auto d = generate(sc);
      BootstrapOptions o;
      o.n_boot = 200;
      o.seed = 9000 + static_cast<std::uint64_t>(i);
      o.threads = threads;
      return bootstrap(d, pipeline, o);
    };
    const auto t0 = Clock::now();
    std::vector<EstimateWithCI> runs;
    int covered = 0;
    std::size_t failed = 0;
    for (int i = 0; i < 200; ++i) {
      runs.push_back(one(i, 4));
      covered += runs.back().ci_lower <= truth && truth <= runs.back().ci_upper;
      failed += runs.back().n_failed;
    }
    const double secs = since(t0);
    bool identical = true;
    for (int i = 0; i < 200; i += 20) {
      const auto again = one(i, 1);
      identical = identical && again.point == runs[i].point && again.se == runs[i].se &&
                  again.ci_lower == runs[i].ci_lower && again.ci_upper == runs[i].ci_upper;
    }
    const double rate = covered / 200.0;
    return std::pair{rate >= 0.88 && rate <= 0.99 && secs < 900.0 && identical,
                     fmt::format("coverage={:.3f} (0.88-0.99) truth={:.4f} failed_replicates={} rerun_identical={} "
                                 "{:.1f}s (<900)",
                                 rate, truth, failed, identical, secs)};
  });

  run(6, "estimand_identities", [] {
    std::mt19937_64 rng(6);
    const auto t0 = Clock::now();
    double worst = 0.0;
    bool quantile_monotone = true;
    for (int rep = 0; rep < 2000; ++rep) {
      const auto s = random_surface(rng);
      const auto tau = static_cast<std::size_t>(rep) % s.nz();
      std::vector<double> ref(s.nt());
      for (std::size_t j = 0; j < s.nt(); ++j) ref[j] = s.values(static_cast<Eigen::Index>(tau), static_cast<Eigen::Index>(j));
      const auto diff = contrast_with_reference(s, ContrastKind::Difference, ref, "difference");
      const auto ratio = contrast_with_reference(s, ContrastKind::Ratio, ref, "ratio");
      for (std::size_t j = 0; j < s.nt(); ++j) {
        const auto a = static_cast<Eigen::Index>(tau), b = static_cast<Eigen::Index>(j);
        worst = std::max(worst, std::abs(diff.values(a, b)));
        if (ratio.defined(a, b)) worst = std::max(worst, std::abs(ratio.values(a, b) - 1.0));
      }
      Surface ones = s;
      ones.values.setOnes();
      const double lambda = s.t_grid.back() * std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      for (const auto& v : rmst_curve(ones, lambda)) worst = std::max(worst, std::abs(v.value - lambda));
      std::vector<std::vector<EstimandValue>> q;
      for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) q.push_back(quantile_curve(s, p));
      for (std::size_t k = 1; k < q.size(); ++k)
        for (std::size_t i = 0; i < s.nz(); ++i)
          if (q[k - 1][i].defined && !(q[k][i].defined && q[k][i].value <= q[k - 1][i].value)) quantile_monotone = false;
    }
    // fitted surface, tau on the grid, through the g-computation reference
    Scenario sc;
    sc.n = 300;
    sc.confounded = true;
    sc.gamma = 0.5;
    sc.alpha = 0.5;
    const auto d = generate(sc);
    const CoxFit fit = fit_cox(d, Design::standard(d, BasisSpec::natural_spline(3)));
    const auto g = default_grids(d, 30);
    const auto s = counterfactual_surface(fit, d, g.z, g.t);
    const auto diff = contrast_surface(s, ContrastSpec::fixed(ContrastKind::Difference, g.z[11]), fit, d);
    const auto ratio = contrast_surface(s, ContrastSpec::fixed(ContrastKind::Ratio, g.z[11]), fit, d);
    for (Eigen::Index j = 0; j < diff.values.cols(); ++j) {
      worst = std::max(worst, std::abs(diff.values(11, j)));
      if (ratio.defined(11, j)) worst = std::max(worst, std::abs(ratio.values(11, j) - 1.0));
    }
    const double secs = since(t0);
    return std::pair{worst <= 1e-12 && quantile_monotone && secs < 10.0,
                     fmt::format("max deviation={:.1e} (<=1e-12) quantiles monotone={} {:.2f}s (<10)", worst,
                                 quantile_monotone, secs)};
  });

  run(7, "faceting", [] {
    Scenario sc;
    sc.beta = -1.6;
    sc.beta2 = 1.0;  // hazard smallest at z = 0.8
    const auto z = linspace(-2.0, 3.0, 100);
    const auto t = linspace(0.0, 20.0, 41);
    const auto truth = true_surface(sc, z, t);
    const auto segs = monotone_segments(truth);
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (std::abs(z[i] - 0.8) < std::abs(z[nearest] - 0.8)) nearest = i;
    const bool two = segs.size() == 2 && segs[0].last == nearest && segs[1].first == nearest + 1;

    // fitted quadratic model on simulated data
    sc.n = 3000;
    sc.seed = 17;
    const auto d = generate(sc);
    const CoxFit fit = fit_cox(d, Design::standard(d, BasisSpec::polynomial(2)));
    const auto zf = linspace(-1.5, 2.5, 60);
    const auto fitted = counterfactual_surface(fit, d, zf, t);
    const auto fsegs = monotone_segments(fitted);

    const auto drifting = testing::drifting_surface();
    bool inconsistent = false;
    try {
      monotone_segments(drifting);
    } catch (const Error& e) {
      inconsistent = e.kind() == ErrorKind::ShapeInconsistentAcrossTime;
    }
    return std::pair{two && fsegs.size() == 2 && inconsistent,
                     fmt::format("truth segments={} split after z={:.4f} (nearest to 0.8: {:.4f}) fitted segments={} "
                                 "split after z={:.3f} time-interacting->ShapeInconsistentAcrossTime={}",
                                 segs.size(), z[segs[0].last], z[nearest], fsegs.size(), zf[fsegs[0].last], inconsistent)};
  });

  run(8, "residual_identities", [] {
    std::mt19937_64 rng(8);
    double worst_s = 0.0, worst_m = 0.0;
    int datasets = 0;
    for (int rep = 0; rep < 60; ++rep) {
      Scenario sc;
      sc.n = std::uniform_int_distribution<std::size_t>(20, 200)(rng);
      sc.confounded = true;
      sc.gamma = 0.5;
      sc.alpha = 0.6;
      sc.censor_rate = 0.05;
      sc.seed = 800 + static_cast<std::uint64_t>(rep);
      auto d = generate(sc);
      if (rep % 2 == 0) {  // coarsened times give ties
        for (auto& r : d.records) r.time = std::ceil(r.time);
      }
      const auto basis = rep % 3 == 0 ? BasisSpec::linear() : BasisSpec::natural_spline(3);
      CoxFit fit;
      try {
        fit = fit_cox(d, Design::standard(d, basis));
      } catch (const Error&) {
        continue;
      }
      ++datasets;
      const auto sr = schoenfeld_residuals(fit, d);
      for (Eigen::Index j = 0; j < sr.residuals.cols(); ++j) worst_s = std::max(worst_s, std::abs(sr.residuals.col(j).sum()));
      double m = 0.0, m0 = 0.0;
      for (double v : martingale_residuals(d, fit)) m += v;
      for (double v : null_martingale_residuals(d)) m0 += v;
      worst_m = std::max({worst_m, std::abs(m), std::abs(m0)});
    }
    return std::pair{worst_s < 1e-8 && worst_m < 1e-8 && datasets >= 50,
                     fmt::format("datasets={} max|sum schoenfeld|={:.1e} max|sum martingale|={:.1e} (<1e-8)", datasets,
                                 worst_s, worst_m)};
  });

  run(9, "renderer", [] {
    Scenario sc;
    sc.n = 500;
    sc.seed = 9;
    const auto d = generate(sc);
    const auto g = default_grids(d, 40);
    const auto s = true_surface(sc, g.z, g.t);
    std::string problems;
    bool identical = true;
    for (auto k : all_plot_kinds()) {
      PlotSpec p;
      p.kind = k;
      RenderOutput a, b;
      if (k == PlotKind::KMCurves) {
        const std::vector<double> cuts = {-10.0, 0.0, 10.0};
        const auto strata = stratified_km(d, cuts);
        a = render(km_curve_set(strata, {}), p);
        b = render(km_curve_set(strata, {}), p);
      } else if (k == PlotKind::ResidualScatter) {
        ScatterData sd;
        sd.x = d.exposures();
        sd.y = null_martingale_residuals(d);
        sd.smooth = loess_overlay(sd.x, sd.y);
        a = render(sd, p);
        b = render(sd, p);
      } else {
        a = render(s, p);
        b = render(s, p);
      }
      identical = identical && a.svg == b.svg && a.data_csv == b.data_csv;
      const auto problem = testing::xml_problem(a.svg);
      if (!problem.empty()) problems += " " + to_string(k) + ": " + problem;
    }
    // layer boundaries vs surface: 600 x 414 panel at (64, 20), survival on [0, 1]
    PlotSpec p;
    const auto area = render(s, p);
    const auto paths = testing::attribute_values(area.svg, "layer", "d");
    double worst = paths.size() == s.nz() - 1 ? 0.0 : 1e9;
    for (std::size_t l = 0; l < paths.size(); ++l) {
      const auto v = v_values(paths[l]);
      if (v.size() != 2 * (s.nt() - 1) + 1) {
        worst = 1e9;
        break;
      }
      for (std::size_t j = 1; j < s.nt(); ++j) {
        const double value = 1.0 - (v[j - 1] - 20.0) / 414.0;
        worst = std::max(worst, std::abs(value - s.values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j))) * 414.0);
      }
    }
    return std::pair{identical && problems.empty() && worst <= 1.0,
                     fmt::format("byte-identical={} well-formed kinds={}/{}{} max boundary error={:.3f}px (<=1)", identical,
                                 all_plot_kinds().size() - std::count(problems.begin(), problems.end(), ':'),
                                 all_plot_kinds().size(), problems, worst)};
  });

  run(10, "thread_determinism", [] {
    Scenario sc;
    sc.n = 800;
    sc.confounded = true;
    sc.gamma = 0.5;
    sc.alpha = 0.5;
    sc.censor_rate = 0.05;
    const auto d = generate(sc);
    const CoxFit fit = fit_cox(d, Design::standard(d, BasisSpec::natural_spline(3)));
    const auto g = default_grids(d, 100);
    const double surf = sup_error(counterfactual_surface(fit, d, g.z, g.t, 1), counterfactual_surface(fit, d, g.z, g.t, 8));
    const std::vector<double> tg = {0.0, 5.0};
    const VectorPipeline pipeline = [&](const Dataset& rd) {
      const CoxFit f = fit_cox(rd, Design::standard(rd));
      return std::vector<double>{counterfactual_curve(f, rd, 0.0, tg)[1], counterfactual_curve(f, rd, 1.0, tg)[1]};
    };
    BootstrapOptions o;
    o.n_boot = 200;
    o.seed = 10;
    o.threads = 1;
    const auto a = bootstrap(d, pipeline, o);
    o.threads = 8;
    const auto b = bootstrap(d, pipeline, o);
    double boot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      boot = std::max({boot, std::abs(a[k].se - b[k].se), std::abs(a[k].ci_lower - b[k].ci_lower),
                       std::abs(a[k].ci_upper - b[k].ci_upper)});
    }
    return std::pair{surf <= 1e-12 && boot <= 1e-12,
                     fmt::format("surface max diff={:.1e} bootstrap max diff={:.1e} (<=1e-12)", surf, boot)};
  });

  fmt::print("{} criteria failed\n", failures);
  return failures;
}
