#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "contsurv/cox_ph.hpp"
#include "contsurv/dataset.hpp"
#include "contsurv/design.hpp"
#include "contsurv/diagnostics.hpp"
#include "contsurv/error.hpp"
#include "contsurv/estimands.hpp"
#include "contsurv/gcomp.hpp"
#include "contsurv/kaplan_meier.hpp"
#include "contsurv/render.hpp"
#include "contsurv/resampling.hpp"
#include "contsurv/simulator.hpp"
#include "contsurv/spline_basis.hpp"
#include "contsurv/surface.hpp"

namespace py = pybind11;
using namespace contsurv;

namespace {

Dataset dataset_from_arrays(const std::vector<double>& time, const std::vector<int>& status,
                            const std::vector<double>& exposure, const Eigen::MatrixXd& confounders,
                            const std::string& exposure_name, const std::vector<std::string>& confounder_names) {
  if (status.size() != time.size() || exposure.size() != time.size()) {
    throw Error(ErrorKind::ArityMismatch, "time, status and exposure must have equal length");
  }
  if (confounders.size() > 0 && static_cast<std::size_t>(confounders.rows()) != time.size()) {
    throw Error(ErrorKind::ArityMismatch, "confounder rows must match the number of subjects");
  }
  const auto q = confounders.size() > 0 ? static_cast<std::size_t>(confounders.cols()) : 0;
  Dataset d;
  d.exposure_name = exposure_name;
  d.confounder_names = confounder_names;
  if (d.confounder_names.empty()) {
    for (std::size_t j = 0; j < q; ++j) d.confounder_names.push_back("x" + std::to_string(j + 1));
  }
  if (d.confounder_names.size() != q) throw Error(ErrorKind::ArityMismatch, "confounder names do not match columns");
  for (std::size_t i = 0; i < time.size(); ++i) {
    SubjectRecord r{time[i], status[i], exposure[i], {}};
    for (std::size_t j = 0; j < q; ++j) r.confounders.push_back(confounders(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    d.records.push_back(std::move(r));
  }
  return d;
}

BasisSpec make_basis(const std::string& kind, int df, int degree, const std::vector<double>& knots,
                     const std::vector<double>& cutpoints) {
  switch (basis_kind_from_string(kind)) {
    case BasisKind::Linear: return BasisSpec::linear();
    case BasisKind::Polynomial: return BasisSpec::polynomial(degree > 0 ? degree : 2);
    case BasisKind::BSpline: {
      auto b = BasisSpec::bspline(knots.empty() ? (df > 0 ? df : 4) : 0, degree > 0 ? degree : 3);
      b.knots = knots;
      return b;
    }
    case BasisKind::NaturalSpline: {
      auto b = BasisSpec::natural_spline(knots.empty() ? (df > 0 ? df : 3) : 0);
      b.knots = knots;
      return b;
    }
    case BasisKind::Categorical: return BasisSpec::categorical(cutpoints);
  }
  return BasisSpec::linear();
}

py::array_t<double> to_array(const std::vector<EstimandValue>& values) {
  py::array_t<double> out(static_cast<py::ssize_t>(values.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < values.size(); ++i) {
    view(static_cast<py::ssize_t>(i)) = values[i].defined ? values[i].value : std::nan("");
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Counterfactual survival surfaces for continuous exposures";

  static py::exception<Error> exc(m, "ContsurvError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_arrays", &dataset_from_arrays, py::arg("time"), py::arg("status"), py::arg("exposure"),
                  py::arg("confounders") = Eigen::MatrixXd(), py::arg("exposure_name") = "z",
                  py::arg("confounder_names") = std::vector<std::string>{})
      .def_static(
          "from_csv",
          [](const std::string& path, const std::string& exposure, const std::vector<std::string>& confounders,
             const std::string& time, const std::string& status) {
            Schema s;
            s.time = time;
            s.status = status;
            s.exposure = exposure;
            s.confounders = confounders;
            return load_csv(path, s);
          },
          py::arg("path"), py::arg("exposure"), py::arg("confounders") = std::vector<std::string>{},
          py::arg("time") = "time", py::arg("status") = "status")
      .def("to_csv", [](const Dataset& d) {
        std::ostringstream out;
        write_csv(d, out);
        return out.str();
      })
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("times", &Dataset::times)
      .def_property_readonly("statuses", &Dataset::statuses)
      .def_property_readonly("exposures", &Dataset::exposures)
      .def_readonly("exposure_name", &Dataset::exposure_name)
      .def_readonly("confounder_names", &Dataset::confounder_names)
      .def("validate", [](const Dataset& d) {
        std::vector<std::string> out;
        for (const auto& v : validate(d)) out.push_back(v.describe());
        return out;
      });

  py::class_<CoxFit>(m, "CoxFit")
      .def_readonly("coefficients", &CoxFit::coefficients)
      .def_readonly("coefficient_names", &CoxFit::coefficient_names)
      .def_readonly("covariance", &CoxFit::covariance)
      .def_readonly("loglik_null", &CoxFit::loglik_null)
      .def_readonly("loglik_final", &CoxFit::loglik_final)
      .def_readonly("iterations", &CoxFit::iterations)
      .def_readonly("converged", &CoxFit::converged)
      .def("standard_errors", &CoxFit::standard_errors)
      .def("baseline_cumhaz",
           [](const CoxFit& f) { return py::make_tuple(f.baseline_cumhaz.knots(), f.baseline_cumhaz.values()); })
      .def("to_json", [](const CoxFit& f) { return to_json(f).dump(2); })
      .def_static("from_json", [](const std::string& text) { return cox_fit_from_json(nlohmann::json::parse(text)); });

  m.def(
      "fit_cox",
      [](const Dataset& d, const std::string& basis, int df, int degree, const std::vector<double>& knots,
         const std::vector<double>& cutpoints, bool adjust) {
        return fit_cox(d, Design::standard(d, make_basis(basis, df, degree, knots, cutpoints), adjust));
      },
      py::arg("data"), py::arg("basis") = "linear", py::arg("df") = 0, py::arg("degree") = 0,
      py::arg("knots") = std::vector<double>{}, py::arg("cutpoints") = std::vector<double>{}, py::arg("adjust") = true,
      "Fit a Breslow-ties Cox model with the exposure expanded in the given basis.");

  py::class_<Surface>(m, "Surface")
      .def_readonly("z_grid", &Surface::z_grid)
      .def_readonly("t_grid", &Surface::t_grid)
      .def_readonly("values", &Surface::values)
      .def_readonly("extrapolated", &Surface::extrapolated)
      .def_readonly("estimand", &Surface::estimand)
      .def_readonly("model", &Surface::model)
      .def_readonly("adjusted", &Surface::adjusted)
      .def_property_readonly("defined", [](const Surface& s) { return Eigen::MatrixXi(s.defined.cast<int>().matrix()); })
      .def("to_csv",
           [](const Surface& s) {
             std::ostringstream out;
             write_surface_csv(s, out);
             return out.str();
           })
      .def_static("from_csv", [](const std::string& text) {
        std::istringstream in(text);
        return read_surface_csv(in);
      });

  m.def(
      "counterfactual_surface",
      [](const CoxFit& fit, const Dataset& d, std::optional<std::vector<double>> z_grid,
         std::optional<std::vector<double>> t_grid, unsigned threads) {
        Grids g = default_grids(d);
        if (z_grid) g.z = *z_grid;
        if (t_grid) g.t = *t_grid;
        py::gil_scoped_release release;
        return counterfactual_surface(fit, d, g.z, g.t, threads);
      },
      py::arg("fit"), py::arg("data"), py::arg("z_grid") = py::none(), py::arg("t_grid") = py::none(),
      py::arg("threads") = 1, "G-computation surface; defaults to 100 exposure points and all event times.");

  m.def("landmark", [](const Surface& s, double t) { return to_array(landmark(s, t)); }, py::arg("surface"), py::arg("t"));
  m.def("quantile_curve", [](const Surface& s, double p) { return to_array(quantile_curve(s, p)); }, py::arg("surface"),
        py::arg("p"));
  m.def("rmst_curve", [](const Surface& s, double lambda) { return to_array(rmst_curve(s, lambda)); },
        py::arg("surface"), py::arg("horizon"));
  m.def(
      "contrast",
      [](const Surface& s, const std::string& kind, std::optional<double> tau, const CoxFit& fit, const Dataset& d) {
        const ContrastKind k = kind == "ratio" ? ContrastKind::Ratio : ContrastKind::Difference;
        const ContrastSpec spec = tau ? ContrastSpec::fixed(k, *tau) : ContrastSpec::observed_km(k);
        return contrast_surface(s, spec, fit, d);
      },
      py::arg("surface"), py::arg("kind"), py::arg("tau"), py::arg("fit"), py::arg("data"),
      "Difference or ratio against S_tau (tau given) or the Kaplan-Meier curve (tau=None).");

  m.def(
      "kaplan_meier",
      [](const std::vector<double>& times, const std::vector<int>& status) {
        const auto km = kaplan_meier(times, status);
        return py::make_tuple(km.knots(), km.values());
      },
      py::arg("times"), py::arg("status"));

  m.def(
      "bootstrap_survival",
      [](const Dataset& d, double z, double t, std::size_t n_boot, double level, std::uint64_t seed, unsigned threads,
         bool adjust) {
        const ScalarPipeline pipeline = [z, t, adjust](const Dataset& rd) {
          const CoxFit fit = fit_cox(rd, Design::standard(rd, BasisSpec::linear(), adjust));
          const std::vector<double> grid = {0.0, t};
          return counterfactual_curve(fit, rd, z, grid)[1];
        };
        BootstrapOptions opts;
        opts.n_boot = n_boot;
        opts.level = level;
        opts.seed = seed;
        opts.threads = threads;
        py::gil_scoped_release release;
        const auto r = bootstrap(d, pipeline, opts);
        py::gil_scoped_acquire acquire;
        py::dict out;
        out["point"] = r.point;
        out["se"] = r.se;
        out["ci_lower"] = r.ci_lower;
        out["ci_upper"] = r.ci_upper;
        out["n_failed"] = r.n_failed;
        return out;
      },
      py::arg("data"), py::arg("z"), py::arg("t"), py::arg("n_boot") = 1000, py::arg("level") = 0.95,
      py::arg("seed") = 1, py::arg("threads") = 1, py::arg("adjust") = true,
      "Percentile bootstrap for S_z(t) under a linear exposure model.");

  m.def("martingale_residuals", &martingale_residuals, py::arg("data"), py::arg("fit"));
  m.def("null_martingale_residuals", &null_martingale_residuals, py::arg("data"));
  m.def(
      "schoenfeld_residuals",
      [](const CoxFit& fit, const Dataset& d) {
        const auto r = schoenfeld_residuals(fit, d);
        return py::make_tuple(r.time, r.residuals);
      },
      py::arg("fit"), py::arg("data"));

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("n", &Scenario::n)
      .def_readwrite("rate", &Scenario::rate)
      .def_readwrite("beta", &Scenario::beta)
      .def_readwrite("beta2", &Scenario::beta2)
      .def_readwrite("confounded", &Scenario::confounded)
      .def_readwrite("gamma", &Scenario::gamma)
      .def_readwrite("alpha", &Scenario::alpha)
      .def_readwrite("censor_rate", &Scenario::censor_rate)
      .def_readwrite("seed", &Scenario::seed)
      .def_property(
          "weibull",
          [](const Scenario& s) { return s.baseline == BaselineKind::Weibull; },
          [](Scenario& s, bool w) { s.baseline = w ? BaselineKind::Weibull : BaselineKind::Exponential; })
      .def_readwrite("weibull_shape", &Scenario::weibull_shape)
      .def_readwrite("weibull_scale", &Scenario::weibull_scale);

  m.def("simulate", &generate, py::arg("scenario"));
  m.def("true_survival", &true_survival, py::arg("scenario"), py::arg("z"), py::arg("t"));
  m.def(
      "true_surface",
      [](const Scenario& s, const std::vector<double>& z, const std::vector<double>& t) { return true_surface(s, z, t); },
      py::arg("scenario"), py::arg("z_grid"), py::arg("t_grid"));

  m.def(
      "render",
      [](const Surface& s, const std::string& kind, int bins, const std::string& facet, int width, int height,
         const std::string& title) {
        PlotSpec spec;
        spec.kind = plot_kind_from_string(kind);
        spec.bins = bins;
        spec.facet = facet == "off" ? FacetMode::Off : FacetMode::Auto;
        spec.width = width;
        spec.height = height;
        spec.title = title;
        const auto r = render(s, spec);
        return py::make_tuple(r.svg, r.data_csv, r.warnings);
      },
      py::arg("surface"), py::arg("kind") = "area_continuous", py::arg("bins") = 10, py::arg("facet") = "auto",
      py::arg("width") = 760, py::arg("height") = 480, py::arg("title") = "",
      "Render a surface plot; returns (svg, data_csv, warnings).");

  m.attr("__version__") = "0.1.0";
}
