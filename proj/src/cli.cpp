#include "contsurv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "contsurv/cox_ph.hpp"
#include "contsurv/csv.hpp"
#include "contsurv/dataset.hpp"
#include "contsurv/design.hpp"
#include "contsurv/diagnostics.hpp"
#include "contsurv/error.hpp"
#include "contsurv/estimands.hpp"
#include "contsurv/gcomp.hpp"
#include "contsurv/kaplan_meier.hpp"
#include "contsurv/parallel.hpp"
#include "contsurv/render.hpp"
#include "contsurv/resampling.hpp"
#include "contsurv/simulator.hpp"
#include "contsurv/spline_basis.hpp"
#include "contsurv/surface.hpp"

namespace contsurv {

namespace {

struct ModelOptions {
  std::string data;
  std::string time = "time";
  std::string status = "status";
  std::string exposure;
  std::vector<std::string> confounders;
  std::string basis = "linear";
  int df = 0;
  int degree = 0;
  std::vector<double> knots;
  std::vector<double> cutpoints;
  std::vector<double> boundary;
  bool intercept = false;
  bool unadjusted = false;
};

void add_data_options(CLI::App* cmd, ModelOptions& m, bool require_exposure) {
  cmd->add_option("--data", m.data, "Input dataset (CSV)")->required();
  cmd->add_option("--time", m.time, "Time column")->capture_default_str();
  cmd->add_option("--status", m.status, "Status column (1 = event, 0 = censored)")->capture_default_str();
  auto* ex = cmd->add_option("--exposure", m.exposure, "Continuous exposure column");
  if (require_exposure) ex->required();
  cmd->add_option("--confounders", m.confounders, "Confounder columns")->delimiter(',');
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  add_data_options(cmd, m, true);
  cmd->add_option("--basis", m.basis, "Exposure basis: linear, polynomial, bspline, natural_spline, categorical")
      ->capture_default_str();
  cmd->add_option("--df", m.df, "Spline degrees of freedom");
  cmd->add_option("--degree", m.degree, "Polynomial / B-spline degree");
  cmd->add_option("--knots", m.knots, "Interior knots (default: quantiles of the exposure)")->delimiter(',');
  cmd->add_option("--cutpoints", m.cutpoints, "Category cutpoints for the categorical basis")->delimiter(',');
  cmd->add_option("--boundary", m.boundary, "Boundary knots lo,hi")->delimiter(',')->expected(2);
  cmd->add_flag("--intercept", m.intercept, "Keep the spline intercept column");
  cmd->add_flag("--unadjusted", m.unadjusted, "Ignore confounders in the outcome model");
}

BasisSpec make_basis(const ModelOptions& m) {
  const BasisKind kind = basis_kind_from_string(m.basis);
  BasisSpec spec;
  switch (kind) {
    case BasisKind::Linear:
      spec = BasisSpec::linear();
      break;
    case BasisKind::Polynomial:
      spec = BasisSpec::polynomial(m.degree > 0 ? m.degree : 2);
      break;
    case BasisKind::BSpline:
      spec = BasisSpec::bspline(m.df, m.degree > 0 ? m.degree : 3);
      if (m.df == 0 && m.knots.empty()) spec.df = 4;
      break;
    case BasisKind::NaturalSpline:
      spec = BasisSpec::natural_spline(m.df);
      if (m.df == 0 && m.knots.empty()) spec.df = 3;
      break;
    case BasisKind::Categorical:
      if (m.cutpoints.empty()) throw Error(ErrorKind::InvalidArgument, "categorical basis needs --cutpoints");
      spec = BasisSpec::categorical(m.cutpoints);
      break;
  }
  spec.knots = m.knots;
  if (!m.knots.empty() && kind != BasisKind::Categorical) spec.df = 0;
  if (m.boundary.size() == 2) spec.boundary = std::array<double, 2>{m.boundary[0], m.boundary[1]};
  spec.intercept = m.intercept;
  return spec;
}

Dataset load_dataset(const ModelOptions& m) {
  Schema schema;
  schema.time = m.time;
  schema.status = m.status;
  schema.exposure = m.exposure;
  schema.confounders = m.confounders;
  Dataset d = load_csv(m.data, schema);
  require_valid(d);
  return d;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

CoxFit load_fit(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  return cox_fit_from_json(j);
}

// Observed times and statuses only, for Kaplan-Meier references.
std::pair<std::vector<double>, std::vector<int>> load_time_status(const std::string& path, const std::string& time,
                                                                  const std::string& status) {
  const auto table = csv::read_file(path);
  const auto ti = table.require_column(time);
  const auto si = table.require_column(status);
  std::vector<double> t;
  std::vector<int> s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto tv = csv::parse_double(row.at(ti));
    if (!tv || !(*tv > 0.0) || !std::isfinite(*tv)) throw Error(ErrorKind::ParseError, fmt::format("row {}: bad time", r));
    if (row.at(si) != "0" && row.at(si) != "1") throw Error(ErrorKind::ParseError, fmt::format("row {}: bad status", r));
    t.push_back(*tv);
    s.push_back(row.at(si) == "1" ? 1 : 0);
  }
  if (t.empty()) throw Error(ErrorKind::EmptyDataset, path + " has no records");
  return {t, s};
}

ContrastKind contrast_kind(const std::string& text) {
  if (text == "difference") return ContrastKind::Difference;
  if (text == "ratio") return ContrastKind::Ratio;
  throw Error(ErrorKind::InvalidArgument, "contrast type must be difference or ratio");
}

// ---- fit

struct FitArgs {
  ModelOptions model;
  std::string out;
};

void run_fit(const FitArgs& a, std::ostream& out) {
  const Dataset d = load_dataset(a.model);
  const CoxFit fit = fit_cox(d, Design::standard(d, make_basis(a.model), !a.model.unadjusted));
  write_text(a.out, to_json(fit).dump(2) + "\n", out);
}

// ---- surface

struct SurfaceArgs {
  std::string fit;
  std::string data;
  std::string time = "time";
  std::string status = "status";
  std::size_t z_points = 100;
  std::optional<double> z_min, z_max;
  std::vector<double> z_values;
  std::vector<double> t_values;
  unsigned threads = 0;
  std::string out;
};

void run_surface(const SurfaceArgs& a, std::ostream& out) {
  const CoxFit fit = load_fit(a.fit);
  Schema schema;
  schema.time = a.time;
  schema.status = a.status;
  schema.exposure = fit.design.exposure_name();
  schema.confounders = fit.design.confounder_names();
  const Dataset d = load_csv(a.data, schema);
  require_valid(d);
  Grids grids = default_grids(d, a.z_points);
  if (!a.z_values.empty()) {
    grids.z = a.z_values;
  } else if (a.z_min || a.z_max) {
    grids.z = linspace(a.z_min.value_or(d.min_exposure()), a.z_max.value_or(d.max_exposure()), a.z_points);
  }
  if (!a.t_values.empty()) grids.t = a.t_values;
  const auto s = counterfactual_surface(fit, d, grids.z, grids.t, resolve_threads(a.threads));
  std::ostringstream text;
  write_surface_csv(s, text);
  write_text(a.out, text.str(), out);
}

// ---- plot

struct PlotArgs {
  std::string kind = "area_continuous";
  std::string surface;
  ModelOptions km;  // km_curves input
  std::string residuals;
  std::string x_column, y_column;
  double span = 0.75;
  int bins = 10;
  std::vector<std::string> colors;
  int width = 760;
  int height = 480;
  std::string facet = "auto";
  std::string title, x_label, y_label;
  bool ci_band = false;
  double opacity = 1.0;
  std::vector<double> landmark_times, quantile_probs, rmst_horizons, values;
  std::string out;
  std::string csv_out;
};

void run_plot(const PlotArgs& a, std::ostream& out, std::ostream& err) {
  PlotSpec spec;
  spec.kind = plot_kind_from_string(a.kind);
  spec.bins = a.bins;
  if (!a.colors.empty()) spec.color_scale = ColorScale::from_hex(a.colors);
  spec.width = a.width;
  spec.height = a.height;
  if (a.facet == "off") {
    spec.facet = FacetMode::Off;
  } else if (a.facet != "auto") {
    throw Error(ErrorKind::InvalidArgument, "--facet must be auto or off");
  }
  spec.title = a.title;
  spec.x_label = a.x_label;
  spec.y_label = a.y_label;
  spec.ci_band = a.ci_band;
  spec.opacity = a.opacity;
  spec.landmark_times = a.landmark_times;
  spec.quantile_probs = a.quantile_probs;
  spec.rmst_horizons = a.rmst_horizons;
  spec.values = a.values;

  RenderOutput r;
  if (spec.kind == PlotKind::KMCurves) {
    if (a.km.data.empty() || a.km.exposure.empty() || a.km.cutpoints.empty()) {
      throw Error(ErrorKind::InvalidArgument, "km_curves needs --data, --exposure and --cutpoints");
    }
    const Dataset d = load_dataset(a.km);
    const auto strata = stratified_km(d, a.km.cutpoints);
    std::vector<KMBand> bands;
    if (a.ci_band) {
      for (std::size_t k = 0; k < strata.size(); ++k) {
        std::vector<double> t;
        std::vector<int> s;
        for (const auto& rec : d.records) {
          if (interval_index(rec.exposure, a.km.cutpoints) == k) {
            t.push_back(rec.time);
            s.push_back(rec.status);
          }
        }
        bands.push_back(km_confidence_band(t, s));
      }
    }
    auto set = km_curve_set(strata, bands);
    set.x_label = "Time";
    r = render(set, spec);
  } else if (spec.kind == PlotKind::ResidualScatter) {
    if (a.residuals.empty()) throw Error(ErrorKind::InvalidArgument, "residual_scatter needs --residuals");
    const auto table = csv::read_file(a.residuals);
    if (table.header.size() < 2) throw Error(ErrorKind::ParseError, "residual file needs at least two columns");
    const auto xi = a.x_column.empty() ? std::size_t{0} : table.require_column(a.x_column);
    const auto yi = a.y_column.empty() ? table.header.size() - 1 : table.require_column(a.y_column);
    ScatterData data;
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
      const auto x = csv::parse_double(table.rows[row].at(xi));
      const auto y = csv::parse_double(table.rows[row].at(yi));
      if (!x || !y) throw Error(ErrorKind::ParseError, fmt::format("{}: row {} is not numeric", a.residuals, row));
      data.x.push_back(*x);
      data.y.push_back(*y);
    }
    data.x_label = table.header[xi];
    data.y_label = table.header[yi];
    if (data.x.size() >= 10) {
      data.smooth = loess_overlay(data.x, data.y, a.span);
    } else {
      err << "warning: fewer than 10 points, smoother omitted\n";
    }
    r = render(data, spec);
  } else {
    if (a.surface.empty()) throw Error(ErrorKind::InvalidArgument, "plot kind '" + a.kind + "' needs --surface");
    r = render(load_surface_csv(a.surface), spec);
  }
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  write_text(a.out, r.svg, out);
  if (!a.csv_out.empty()) write_text(a.csv_out, r.data_csv, out);
}

// ---- contrast

struct ContrastArgs {
  std::string surface;
  std::string type = "difference";
  std::optional<double> tau;
  std::string fit;
  std::string data;
  std::string time = "time";
  std::string status = "status";
  std::string out;
};

void run_contrast(const ContrastArgs& a, std::ostream& out) {
  const Surface s = load_surface_csv(a.surface);
  const ContrastKind kind = contrast_kind(a.type);
  Surface c;
  if (a.tau) {
    if (a.fit.empty() || a.data.empty()) throw Error(ErrorKind::InvalidArgument, "--tau needs --fit and --data");
    const CoxFit fit = load_fit(a.fit);
    Schema schema;
    schema.time = a.time;
    schema.status = a.status;
    schema.exposure = fit.design.exposure_name();
    schema.confounders = fit.design.confounder_names();
    const Dataset d = load_csv(a.data, schema);
    c = contrast_surface(s, ContrastSpec::fixed(kind, *a.tau), fit, d);
  } else {
    std::optional<StepFunction> km;
    if (!a.data.empty()) {
      const auto [t, st] = load_time_status(a.data, a.time, a.status);
      km = kaplan_meier(t, st);
    }
    c = contrast_surface(s, ContrastSpec::observed_km(kind), km);
  }
  std::ostringstream text;
  write_surface_csv(c, text);
  write_text(a.out, text.str(), out);
}

// ---- estimand

struct EstimandArgs {
  std::string surface;
  std::string type = "landmark";
  std::vector<double> at;
  std::string out;
};

void run_estimand(const EstimandArgs& a, std::ostream& out, std::ostream& err) {
  const Surface s = load_surface_csv(a.surface);
  std::ostringstream text;
  bool header = true;
  for (double v : a.at) {
    std::vector<EstimandValue> values;
    if (a.type == "landmark") {
      values = landmark(s, v);
    } else if (a.type == "quantile") {
      values = quantile_curve(s, v);
    } else if (a.type == "rmst") {
      values = rmst_curve(s, v);
    } else {
      throw Error(ErrorKind::InvalidArgument, "estimand type must be landmark, quantile or rmst");
    }
    const auto missing = std::count_if(values.begin(), values.end(), [](const auto& e) { return !e.defined; });
    if (missing > 0) err << fmt::format("warning: {} undefined values for {} at {}\n", missing, a.type, v);
    write_estimand_csv(values, a.type, text, header);
    header = false;
  }
  write_text(a.out, text.str(), out);
}

// ---- bootstrap

struct BootstrapArgs {
  ModelOptions model;
  std::string estimand = "survival";
  std::vector<double> z;
  std::vector<double> t;
  std::optional<double> tau;
  std::size_t n_boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
};

struct Query {
  double z, t;
};

std::vector<double> evaluate_queries(const Dataset& d, const BasisSpec& basis, bool adjust, const std::string& estimand,
                                     const std::vector<Query>& queries, std::optional<double> tau,
                                     std::string* model_label) {
  const CoxFit fit = fit_cox(d, Design::standard(d, basis, adjust));
  std::set<double> zs, ts;
  ts.insert(0.0);
  for (double t : d.event_times()) ts.insert(t);
  for (const auto& q : queries) {
    zs.insert(q.z);
    if (estimand != "quantile") ts.insert(q.t);
  }
  if (tau) zs.insert(*tau);
  const std::vector<double> zg(zs.begin(), zs.end()), tg(ts.begin(), ts.end());
  const Surface s = counterfactual_surface(fit, d, zg, tg, 1);
  if (model_label) *model_label = s.model;
  auto zi = [&](double z) { return static_cast<std::size_t>(std::lower_bound(zg.begin(), zg.end(), z) - zg.begin()); };

  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    const std::size_t i = zi(q.z);
    double v = std::nan("");
    if (estimand == "survival") {
      v = s.value_at(i, q.t);
    } else if (estimand == "rmst") {
      v = rmst_curve(s, q.t)[i].value;
    } else if (estimand == "quantile") {
      const auto e = quantile_curve(s, q.t)[i];
      if (e.defined) v = e.value;
    } else {
      const double ref = s.value_at(zi(*tau), q.t);
      const double cur = s.value_at(i, q.t);
      if (estimand == "difference") {
        v = ref - cur;
      } else if (cur > 0.0) {
        v = ref / cur;
      }
    }
    out.push_back(v);
  }
  return out;
}

void run_bootstrap(const BootstrapArgs& a, std::ostream& out, std::ostream& err) {
  static const std::set<std::string> known = {"survival", "rmst", "quantile", "difference", "ratio"};
  if (!known.count(a.estimand)) {
    throw Error(ErrorKind::InvalidArgument, "estimand must be survival, rmst, quantile, difference or ratio");
  }
  if ((a.estimand == "difference" || a.estimand == "ratio") && !a.tau) {
    throw Error(ErrorKind::InvalidArgument, "--estimand " + a.estimand + " needs --tau");
  }
  const Dataset d = load_dataset(a.model);
  const BasisSpec basis = make_basis(a.model);
  const bool adjust = !a.model.unadjusted;
  std::vector<Query> queries;
  for (double z : a.z)
    for (double t : a.t) queries.push_back({z, t});

  std::string model;
  evaluate_queries(d, basis, adjust, a.estimand, queries, a.tau, &model);
  BootstrapOptions opts;
  opts.n_boot = a.n_boot;
  opts.level = a.level;
  opts.seed = a.seed;
  opts.threads = resolve_threads(a.threads);
  const auto results = bootstrap(
      d, [&](const Dataset& rd) { return evaluate_queries(rd, basis, adjust, a.estimand, queries, a.tau, nullptr); },
      opts);

  std::ostringstream text;
  text << "model,estimand,t,z,estimate,se,ci_lower,ci_upper,level,n_boot,n_failed\n";
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const auto& r = results[k];
    text << '"' << model << "\"," << a.estimand << ',' << csv::format_double(queries[k].t) << ','
         << csv::format_double(queries[k].z) << ',' << csv::format_double(r.point) << ',' << csv::format_double(r.se)
         << ',' << csv::format_double(r.ci_lower) << ',' << csv::format_double(r.ci_upper) << ','
         << csv::format_double(r.level) << ',' << r.n_boot << ',' << r.n_failed << '\n';
  }
  if (!results.empty() && results.front().n_failed > 0) {
    err << fmt::format("warning: {} of {} replicates failed and were excluded\n", results.front().n_failed, a.n_boot);
  }
  write_text(a.out, text.str(), out);
}

// ---- diagnose

struct DiagnoseArgs {
  ModelOptions model;
  std::string type = "schoenfeld";
  std::string covariate;
  bool fitted = false;
  double span = 0.75;
  std::string out;
  std::string svg;
};

void run_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset d = load_dataset(a.model);
  ScatterData scatter;
  std::ostringstream text;
  if (a.type == "schoenfeld") {
    const CoxFit fit = fit_cox(d, Design::standard(d, make_basis(a.model), !a.model.unadjusted));
    const auto r = schoenfeld_residuals(fit, d);
    write_schoenfeld_csv(r, text);
    std::size_t col = 0;
    if (!a.covariate.empty()) {
      auto it = std::find(r.names.begin(), r.names.end(), a.covariate);
      if (it == r.names.end()) throw Error(ErrorKind::MissingColumn, "no model column named '" + a.covariate + "'");
      col = static_cast<std::size_t>(it - r.names.begin());
    }
    scatter.x = r.time;
    for (Eigen::Index k = 0; k < r.residuals.rows(); ++k) scatter.y.push_back(r.residuals(k, static_cast<Eigen::Index>(col)));
    scatter.x_label = "Time";
    scatter.y_label = "Schoenfeld residual (" + (r.names.empty() ? std::string() : r.names[col]) + ")";
  } else if (a.type == "martingale") {
    const std::string name = a.covariate.empty() ? d.exposure_name : a.covariate;
    const auto x = d.variable(name);
    std::vector<double> m;
    if (a.fitted) {
      m = martingale_residuals(d, fit_cox(d, Design::standard(d, make_basis(a.model), !a.model.unadjusted)));
    } else {
      m = null_martingale_residuals(d);
    }
    write_martingale_csv(x, m, name, text);
    scatter.x = x;
    scatter.y = m;
    scatter.x_label = name;
    scatter.y_label = "Martingale residual";
  } else {
    throw Error(ErrorKind::InvalidArgument, "diagnostic type must be schoenfeld or martingale");
  }
  write_text(a.out, text.str(), out);
  if (!a.svg.empty()) {
    if (scatter.x.size() >= 10) {
      scatter.smooth = loess_overlay(scatter.x, scatter.y, a.span);
    } else {
      err << "warning: fewer than 10 points, smoother omitted\n";
    }
    PlotSpec spec;
    spec.kind = PlotKind::ResidualScatter;
    const auto r = render(scatter, spec);
    write_text(a.svg, r.svg, out);
  }
}

// ---- simulate

struct SimulateArgs {
  Scenario scenario;
  std::string baseline = "exponential";
  std::string out;
};

void run_simulate(SimulateArgs a, std::ostream& out) {
  if (a.baseline == "exponential") {
    a.scenario.baseline = BaselineKind::Exponential;
  } else if (a.baseline == "weibull") {
    a.scenario.baseline = BaselineKind::Weibull;
  } else {
    throw Error(ErrorKind::InvalidArgument, "--baseline must be exponential or weibull");
  }
  if (a.scenario.gamma != 0.0 || a.scenario.alpha != 0.0) a.scenario.confounded = true;
  std::ostringstream text;
  write_csv(generate(a.scenario), text);
  write_text(a.out, text.str(), out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual survival surfaces for a continuous exposure", "contsurv"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "TOML file with [subcommand] sections of flag values");
  app.require_subcommand(1);
  app.fallthrough(false);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a Cox model and write it as JSON");
  add_model_options(fit_cmd, fit.model);
  fit_cmd->add_option("--out", fit.out, "Output JSON (default: stdout)");

  SurfaceArgs surf;
  auto* surf_cmd = app.add_subcommand("surface", "Counterfactual survival surface by g-computation");
  surf_cmd->add_option("--fit", surf.fit, "Fit JSON from `fit`")->required();
  surf_cmd->add_option("--data", surf.data, "Dataset the confounder distribution is taken from")->required();
  surf_cmd->add_option("--time", surf.time)->capture_default_str();
  surf_cmd->add_option("--status", surf.status)->capture_default_str();
  surf_cmd->add_option("--z-points", surf.z_points, "Exposure grid size")->capture_default_str()->check(CLI::PositiveNumber);
  surf_cmd->add_option("--z-min", surf.z_min, "Exposure grid start (default: observed minimum)");
  surf_cmd->add_option("--z-max", surf.z_max, "Exposure grid end (default: observed maximum)");
  surf_cmd->add_option("--z-values", surf.z_values, "Explicit exposure grid")->delimiter(',');
  surf_cmd->add_option("--t-values", surf.t_values, "Explicit time grid (must start at 0)")->delimiter(',');
  surf_cmd->add_option("--threads", surf.threads, "Worker threads (default: CONTSURV_THREADS or 1)");
  surf_cmd->add_option("--out", surf.out, "Output CSV (default: stdout)");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render a plot to SVG");
  plot_cmd->add_option("--kind", plot.kind, "Plot kind")->capture_default_str();
  plot_cmd->add_option("--surface", plot.surface, "Surface CSV");
  plot_cmd->add_option("--data", plot.km.data, "Dataset (km_curves)");
  plot_cmd->add_option("--time", plot.km.time)->capture_default_str();
  plot_cmd->add_option("--status", plot.km.status)->capture_default_str();
  plot_cmd->add_option("--exposure", plot.km.exposure, "Exposure column (km_curves)");
  plot_cmd->add_option("--cutpoints", plot.km.cutpoints, "Exposure cutpoints (km_curves)")->delimiter(',');
  plot_cmd->add_option("--residuals", plot.residuals, "Residual CSV from `diagnose` (residual_scatter)");
  plot_cmd->add_option("--x-column", plot.x_column, "Residual file x column (default: first)");
  plot_cmd->add_option("--y-column", plot.y_column, "Residual file y column (default: last)");
  plot_cmd->add_option("--span", plot.span, "LOESS span")->capture_default_str();
  plot_cmd->add_option("--bins", plot.bins, "Bins for binned kinds")->capture_default_str();
  plot_cmd->add_option("--colors", plot.colors, "Gradient stops #rrggbb,...")->delimiter(',');
  plot_cmd->add_option("--width", plot.width)->capture_default_str();
  plot_cmd->add_option("--height", plot.height)->capture_default_str();
  plot_cmd->add_option("--facet", plot.facet, "auto or off")->capture_default_str();
  plot_cmd->add_option("--title", plot.title);
  plot_cmd->add_option("--x-label", plot.x_label);
  plot_cmd->add_option("--y-label", plot.y_label);
  plot_cmd->add_flag("--ci-band", plot.ci_band, "Draw confidence bands (curve kinds)");
  plot_cmd->add_option("--opacity", plot.opacity, "Line and band opacity")->capture_default_str();
  plot_cmd->add_option("--landmark-times", plot.landmark_times)->delimiter(',');
  plot_cmd->add_option("--quantile-probs", plot.quantile_probs)->delimiter(',');
  plot_cmd->add_option("--rmst-horizons", plot.rmst_horizons)->delimiter(',');
  plot_cmd->add_option("--values", plot.values, "Exposure values (value_curves)")->delimiter(',');
  plot_cmd->add_option("--out", plot.out, "Output SVG (default: stdout)");
  plot_cmd->add_option("--csv-out", plot.csv_out, "Sidecar CSV of the plotted values");

  ContrastArgs con;
  auto* con_cmd = app.add_subcommand("contrast", "Difference or ratio against a reference curve");
  con_cmd->add_option("--surface", con.surface, "Survival surface CSV")->required();
  con_cmd->add_option("--type", con.type, "difference or ratio")->capture_default_str();
  con_cmd->add_option("--tau", con.tau, "Reference exposure value (default: observed Kaplan-Meier)");
  con_cmd->add_option("--fit", con.fit, "Fit JSON (needed with --tau)");
  con_cmd->add_option("--data", con.data, "Dataset (Kaplan-Meier reference or g-computation)");
  con_cmd->add_option("--time", con.time)->capture_default_str();
  con_cmd->add_option("--status", con.status)->capture_default_str();
  con_cmd->add_option("--out", con.out, "Output CSV (default: stdout)");

  EstimandArgs est;
  auto* est_cmd = app.add_subcommand("estimand", "Landmark, quantile or RMST curves from a surface");
  est_cmd->add_option("--surface", est.surface, "Survival surface CSV")->required();
  est_cmd->add_option("--type", est.type, "landmark, quantile or rmst")->capture_default_str();
  est_cmd->add_option("--at", est.at, "Landmark times, probabilities or horizons")->delimiter(',')->required();
  est_cmd->add_option("--out", est.out, "Output CSV (default: stdout)");

  BootstrapArgs boot;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Percentile bootstrap intervals for estimands");
  add_model_options(boot_cmd, boot.model);
  boot_cmd->add_option("--estimand", boot.estimand, "survival, rmst, quantile, difference or ratio")
      ->capture_default_str();
  boot_cmd->add_option("--z", boot.z, "Exposure values")->delimiter(',')->required();
  boot_cmd->add_option("--t", boot.t, "Times (survival/difference/ratio), horizons (rmst) or probabilities (quantile)")
      ->delimiter(',')
      ->required();
  boot_cmd->add_option("--tau", boot.tau, "Reference exposure for difference/ratio");
  boot_cmd->add_option("--n-boot", boot.n_boot)->capture_default_str();
  boot_cmd->add_option("--level", boot.level)->capture_default_str();
  boot_cmd->add_option("--seed", boot.seed)->capture_default_str();
  boot_cmd->add_option("--threads", boot.threads, "Worker threads (default: CONTSURV_THREADS or 1)");
  boot_cmd->add_option("--out", boot.out, "Output CSV (default: stdout)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Schoenfeld or martingale residuals");
  add_model_options(diag_cmd, diag.model);
  diag_cmd->add_option("--type", diag.type, "schoenfeld or martingale")->capture_default_str();
  diag_cmd->add_option("--covariate", diag.covariate, "Model column (schoenfeld) or data column (martingale)");
  diag_cmd->add_flag("--fitted", diag.fitted, "Martingale residuals of the fitted model instead of the null model");
  diag_cmd->add_option("--span", diag.span, "LOESS span")->capture_default_str();
  diag_cmd->add_option("--out", diag.out, "Residual CSV (default: stdout)");
  diag_cmd->add_option("--svg", diag.svg, "Scatter plot with smoother");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate proportional-hazards data with known truth");
  sim_cmd->add_option("--n", sim.scenario.n)->capture_default_str();
  sim_cmd->add_option("--seed", sim.scenario.seed)->capture_default_str();
  sim_cmd->add_option("--baseline", sim.baseline, "exponential or weibull")->capture_default_str();
  sim_cmd->add_option("--rate", sim.scenario.rate)->capture_default_str();
  sim_cmd->add_option("--shape", sim.scenario.weibull_shape)->capture_default_str();
  sim_cmd->add_option("--scale", sim.scenario.weibull_scale)->capture_default_str();
  sim_cmd->add_option("--beta", sim.scenario.beta)->capture_default_str();
  sim_cmd->add_option("--beta2", sim.scenario.beta2)->capture_default_str();
  sim_cmd->add_flag("--confounded", sim.scenario.confounded, "Add a normal confounder x");
  sim_cmd->add_option("--confounder-mean", sim.scenario.confounder_mean)->capture_default_str();
  sim_cmd->add_option("--confounder-sd", sim.scenario.confounder_sd)->capture_default_str();
  sim_cmd->add_option("--gamma", sim.scenario.gamma, "Effect of x on the exposure")->capture_default_str();
  sim_cmd->add_option("--alpha", sim.scenario.alpha, "Effect of x on the log hazard")->capture_default_str();
  sim_cmd->add_option("--censor-rate", sim.scenario.censor_rate)->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output CSV (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit_cmd->parsed()) run_fit(fit, out);
    if (surf_cmd->parsed()) run_surface(surf, out);
    if (plot_cmd->parsed()) run_plot(plot, out, err);
    if (con_cmd->parsed()) run_contrast(con, out);
    if (est_cmd->parsed()) run_estimand(est, out, err);
    if (boot_cmd->parsed()) run_bootstrap(boot, out, err);
    if (diag_cmd->parsed()) run_diagnose(diag, out, err);
    if (sim_cmd->parsed()) run_simulate(sim, out);
  } catch (const Error& e) {
    err << "contsurv: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "contsurv: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace contsurv
