#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "contsurv/diagnostics.hpp"
#include "contsurv/kaplan_meier.hpp"
#include "contsurv/surface.hpp"

namespace contsurv {

enum class PlotKind {
  AreaContinuous,
  AreaBinned,
  Contour,
  Heatmap,
  HeatmapBinned,
  Landmark,
  Quantile,
  Rmst,
  ValueCurves,
  KMCurves,
  ResidualScatter,
};

std::string to_string(PlotKind kind);
PlotKind plot_kind_from_string(const std::string& text);
const std::vector<PlotKind>& all_plot_kinds();

enum class FacetMode { Auto, Off };

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  std::string hex() const;
  // WCAG relative luminance of the sRGB colour.
  double luminance() const;
};

Rgb parse_hex_color(const std::string& text);

// Piecewise-linear gradient through evenly spaced stops.
class ColorScale {
 public:
  ColorScale() : ColorScale(sequential_default()) {}
  explicit ColorScale(std::vector<Rgb> stops);
  static ColorScale sequential_default();
  static ColorScale from_hex(const std::vector<std::string>& stops);

  Rgb at(double u) const;  // u is clamped to [0, 1]
  const std::vector<Rgb>& stops() const { return stops_; }

 private:
  std::vector<Rgb> stops_;
};

struct PlotSpec {
  PlotKind kind = PlotKind::AreaContinuous;
  int bins = 10;
  ColorScale color_scale;
  int width = 760;
  int height = 480;
  FacetMode facet = FacetMode::Auto;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool ci_band = false;
  double opacity = 1.0;              // line / band opacity for curve kinds
  std::vector<double> landmark_times;   // landmark kind
  std::vector<double> quantile_probs;   // quantile kind
  std::vector<double> rmst_horizons;    // rmst kind
  std::vector<double> values;           // value_curves: exposure values to draw

  void check() const;
};

struct RenderOutput {
  std::string svg;
  std::string data_csv;
  std::vector<std::string> warnings;
};

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lower;  // optional pointwise band
  std::vector<double> upper;
  std::vector<bool> defined;  // optional; empty means all defined
  bool step = false;          // right-continuous step drawing
  std::string color;          // optional "#rrggbb"
};

struct CurveSet {
  std::vector<Curve> curves;
  std::string x_label;
  std::string y_label;
};

struct ScatterData {
  std::vector<double> x;
  std::vector<double> y;
  SmoothCurve smooth;
  std::string x_label;
  std::string y_label;
};

// Inclusive range of z-grid row indices.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const IndexRange&) const = default;
};

// Splits the z grid where the effect at the last grid time changes direction
// (differences within 1e-8 count as flat) and checks that the same split is
// monotone at every grid time. Throws ShapeInconsistentAcrossTime otherwise.
std::vector<IndexRange> monotone_segments(const Surface& s, double tolerance = 1e-8);

// Surface-based kinds: area_*, contour, heatmap*, landmark, quantile, rmst, value_curves.
RenderOutput render(const Surface& s, const PlotSpec& spec);
// Curve kinds: landmark, quantile, rmst, value_curves, km_curves.
RenderOutput render(const CurveSet& curves, const PlotSpec& spec);
// residual_scatter.
RenderOutput render(const ScatterData& data, const PlotSpec& spec);

// Step curves (with Greenwood bands) for stratified Kaplan-Meier output.
CurveSet km_curve_set(const std::vector<KMStratum>& strata, const std::vector<KMBand>& bands);

}  // namespace contsurv
