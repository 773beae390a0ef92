#include "contsurv/render.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"
#include "contsurv/estimands.hpp"

namespace contsurv {

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::AreaContinuous: return "area_continuous";
    case PlotKind::AreaBinned: return "area_binned";
    case PlotKind::Contour: return "contour";
    case PlotKind::Heatmap: return "heatmap";
    case PlotKind::HeatmapBinned: return "heatmap_binned";
    case PlotKind::Landmark: return "landmark";
    case PlotKind::Quantile: return "quantile";
    case PlotKind::Rmst: return "rmst";
    case PlotKind::ValueCurves: return "value_curves";
    case PlotKind::KMCurves: return "km_curves";
    case PlotKind::ResidualScatter: return "residual_scatter";
  }
  return "area_continuous";
}

const std::vector<PlotKind>& all_plot_kinds() {
  static const std::vector<PlotKind> kinds = {
      PlotKind::AreaContinuous, PlotKind::AreaBinned, PlotKind::Contour,     PlotKind::Heatmap,
      PlotKind::HeatmapBinned,  PlotKind::Landmark,   PlotKind::Quantile,    PlotKind::Rmst,
      PlotKind::ValueCurves,    PlotKind::KMCurves,   PlotKind::ResidualScatter};
  return kinds;
}

PlotKind plot_kind_from_string(const std::string& text) {
  for (auto k : all_plot_kinds()) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown plot kind '" + text + "'");
}

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

double Rgb::luminance() const {
  auto lin = [](std::uint8_t c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  return 0.2126 * lin(r) + 0.7152 * lin(g) + 0.0722 * lin(b);
}

Rgb parse_hex_color(const std::string& text) {
  std::string h = text;
  if (!h.empty() && h.front() == '#') h.erase(0, 1);
  if (h.size() != 6 || h.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "colour must look like #rrggbb: '" + text + "'");
  }
  auto byte = [&](std::size_t pos) { return static_cast<std::uint8_t>(std::stoi(h.substr(pos, 2), nullptr, 16)); };
  return {byte(0), byte(2), byte(4)};
}

ColorScale::ColorScale(std::vector<Rgb> stops) : stops_(std::move(stops)) {
  if (stops_.size() < 2) throw Error(ErrorKind::InvalidArgument, "colour scale needs at least two stops");
}

ColorScale ColorScale::sequential_default() {
  // dark violet -> blue -> teal -> green -> yellow; luminance rises monotonically
  return ColorScale({{0x44, 0x01, 0x54}, {0x3b, 0x52, 0x8b}, {0x21, 0x90, 0x8c}, {0x5d, 0xc8, 0x63}, {0xfd, 0xe7, 0x25}});
}

ColorScale ColorScale::from_hex(const std::vector<std::string>& stops) {
  std::vector<Rgb> rgb;
  for (const auto& s : stops) rgb.push_back(parse_hex_color(s));
  return ColorScale(std::move(rgb));
}

Rgb ColorScale::at(double u) const {
  if (!std::isfinite(u)) u = 0.0;
  u = std::clamp(u, 0.0, 1.0);
  const double pos = u * static_cast<double>(stops_.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), stops_.size() - 2);
  const double f = pos - static_cast<double>(k);
  auto mix = [f](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * f));
  };
  const auto& a = stops_[k];
  const auto& b = stops_[k + 1];
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

void PlotSpec::check() const {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidArgument, "plot dimensions must be positive");
  const bool binned = kind == PlotKind::AreaBinned || kind == PlotKind::Contour || kind == PlotKind::HeatmapBinned;
  if (binned && bins < 2) throw Error(ErrorKind::InvalidArgument, "binned plots need bins >= 2");
  if (!(opacity > 0.0 && opacity <= 1.0)) throw Error(ErrorKind::InvalidArgument, "opacity must lie in (0,1]");
}

std::vector<IndexRange> monotone_segments(const Surface& s, double tolerance) {
  s.check();
  const std::size_t nz = s.nz();
  const auto last = static_cast<Eigen::Index>(s.nt() - 1);
  auto sign = [tolerance](double d) { return d > tolerance ? 1 : (d < -tolerance ? -1 : 0); };

  std::vector<IndexRange> segments;
  std::size_t start = 0;
  int direction = 0;
  for (std::size_t i = 0; i + 1 < nz; ++i) {
    const int sg = sign(s.values(static_cast<Eigen::Index>(i + 1), last) - s.values(static_cast<Eigen::Index>(i), last));
    if (sg == 0) continue;
    if (direction == 0) {
      direction = sg;
    } else if (sg != direction) {
      segments.push_back({start, i});
      start = i + 1;
      direction = sg;
    }
  }
  segments.push_back({start, nz - 1});

  for (Eigen::Index j = 0; j <= last; ++j) {
    for (const auto& seg : segments) {
      bool up = false, down = false;
      for (std::size_t i = seg.first; i < seg.last; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        if (!s.defined(a, j) || !s.defined(a + 1, j)) continue;
        const int sg = sign(s.values(a + 1, j) - s.values(a, j));
        up = up || sg > 0;
        down = down || sg < 0;
      }
      if (up && down) {
        throw Error(ErrorKind::ShapeInconsistentAcrossTime,
                    fmt::format("exposure range [{}, {}] is not monotone at t = {}; the shape of the effect changes "
                                "over time, use a contour plot or heatmap instead",
                                s.z_grid[seg.first], s.z_grid[seg.last], s.t_grid[static_cast<std::size_t>(j)]));
      }
    }
  }
  return segments;
}

namespace {

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  // two decimals, normalised so that -0.00 never appears
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string label_num(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  return fmt::format("{:g}", v);
}

std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0) * mag;
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step) {
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return ticks;
}

struct Panel {
  double left, top, width, height;
  double xmin, xmax, ymin, ymax;

  double X(double v) const { return left + (v - xmin) / (xmax - xmin) * width; }
  double Y(double v) const { return top + height - (v - ymin) / (ymax - ymin) * height; }
};

class Document {
 public:
  Document(const PlotSpec& spec) : spec_(spec) {
    fmt::format_to(std::back_inserter(svg_),
                   "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
                   "viewBox=\"0 0 {} {}\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"11\" "
                   "data-kind=\"{}\">\n",
                   spec.width, spec.height, spec.width, spec.height, to_string(spec.kind));
    svg_ += "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">"
            "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
            "<path d=\"M0,6 L6,0\" stroke=\"#666666\" stroke-width=\"1\"/></pattern></defs>\n";
    fmt::format_to(std::back_inserter(svg_), "<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", spec.width,
                   spec.height);
    if (!spec.title.empty()) {
      fmt::format_to(std::back_inserter(svg_),
                     "<text class=\"title\" x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     num(spec.width / 2.0), xml_escape(spec.title));
    }
  }

  std::string& body() { return svg_; }
  std::string finish() {
    svg_ += "</svg>\n";
    return std::move(svg_);
  }

  // Plot region left of the legend strip, split into `count` facets.
  std::vector<Panel> panels(std::size_t count, bool legend) const {
    const double left = 64, right = legend ? 96 : 24, top = spec_.title.empty() ? 20 : 36, bottom = 46;
    const double gap = 28;
    const double total = spec_.width - left - right;
    const double w = (total - gap * static_cast<double>(count - 1)) / static_cast<double>(count);
    std::vector<Panel> out;
    for (std::size_t k = 0; k < count; ++k) {
      out.push_back({left + static_cast<double>(k) * (w + gap), top, std::max(w, 1.0),
                     std::max(spec_.height - top - bottom, 1.0), 0, 1, 0, 1});
    }
    return out;
  }

  void axes(const Panel& p, const std::string& x_label, const std::string& y_label, bool first_panel) {
    fmt::format_to(std::back_inserter(svg_),
                   "<g class=\"axes\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
                   "stroke=\"#333333\" stroke-width=\"1\"/>\n",
                   num(p.left), num(p.top), num(p.width), num(p.height));
    for (double v : nice_ticks(p.xmin, p.xmax)) {
      const double x = p.X(v);
      fmt::format_to(std::back_inserter(svg_),
                     "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333333\"/>"
                     "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
                     num(x), num(p.top + p.height), num(p.top + p.height + 4), num(p.top + p.height + 16),
                     xml_escape(label_num(v)));
    }
    for (double v : nice_ticks(p.ymin, p.ymax)) {
      const double y = p.Y(v);
      fmt::format_to(std::back_inserter(svg_),
                     "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#333333\"/>"
                     "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
                     num(p.left - 4), num(y), num(p.left), num(p.left - 6), num(y + 4), xml_escape(label_num(v)));
    }
    fmt::format_to(std::back_inserter(svg_),
                   "<text class=\"x-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                   num(p.left + p.width / 2), num(p.top + p.height + 34), xml_escape(x_label));
    if (first_panel) {
      fmt::format_to(std::back_inserter(svg_),
                     "<text class=\"y-label\" x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" "
                     "transform=\"rotate(-90 {0} {1})\">{2}</text>\n",
                     num(p.left - 44), num(p.top + p.height / 2), xml_escape(y_label));
    }
    svg_ += "</g>\n";
  }

  // Vertical legend strip sampling the colour scale at `samples` stops,
  // bottom = lo, top = hi.
  void legend(const ColorScale& scale, double lo, double hi, const std::string& title, int samples = 64) {
    const double x = spec_.width - 80.0, top = spec_.title.empty() ? 28.0 : 44.0;
    const double h = std::max(40.0, spec_.height - top - 80.0);
    const double step = h / samples;
    fmt::format_to(std::back_inserter(svg_), "<g class=\"legend\"><text x=\"{}\" y=\"{}\">{}</text>\n", num(x),
                   num(top - 6), xml_escape(title));
    for (int k = 0; k < samples; ++k) {
      const double u = (k + 0.5) / samples;
      fmt::format_to(std::back_inserter(svg_),
                     "<rect class=\"legend-stop\" data-u=\"{:.6f}\" x=\"{}\" y=\"{}\" width=\"14\" height=\"{}\" "
                     "fill=\"{}\"/>\n",
                     u, num(x), num(top + h - (k + 1) * step), num(step + 0.05), scale.at(u).hex());
    }
    for (double v : nice_ticks(lo, hi, 4)) {
      const double y = top + h - (hi > lo ? (v - lo) / (hi - lo) : 0.0) * h;
      fmt::format_to(std::back_inserter(svg_), "<text x=\"{}\" y=\"{}\">{}</text>\n", num(x + 18), num(y + 4),
                     xml_escape(label_num(v)));
    }
    svg_ += "</g>\n";
  }

  void binned_legend(const std::vector<Rgb>& colors, const std::vector<std::string>& labels, const std::string& title) {
    const double x = spec_.width - 88.0, top = spec_.title.empty() ? 28.0 : 44.0;
    fmt::format_to(std::back_inserter(svg_), "<g class=\"legend\"><text x=\"{}\" y=\"{}\">{}</text>\n", num(x),
                   num(top - 6), xml_escape(title));
    for (std::size_t k = 0; k < colors.size(); ++k) {
      const double y = top + 16.0 * static_cast<double>(colors.size() - 1 - k);
      fmt::format_to(std::back_inserter(svg_),
                     "<rect class=\"legend-stop\" x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>"
                     "<text x=\"{}\" y=\"{}\" font-size=\"9\">{}</text>\n",
                     num(x), num(y), colors[k].hex(), num(x + 15), num(y + 10), xml_escape(labels[k]));
    }
    svg_ += "</g>\n";
  }

 private:
  const PlotSpec& spec_;
  std::string svg_;
};

struct ValueRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Survival-type data keeps the natural [0, 1] range.
  std::pair<double, double> padded(bool unit) const {
    if (unit) return {0.0, 1.0};
    double a = lo, b = hi;
    if (!std::isfinite(a)) return {0.0, 1.0};
    if (b - a < 1e-12) {
      a -= 0.5;
      b += 0.5;
    }
    const double pad = 0.04 * (b - a);
    return {a - pad, b + pad};
  }
};

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_value(double v, bool defined = true) { return defined && std::isfinite(v) ? csv::format_double(v) : "NA"; }

// Step boundary of `curve` over t_grid, left to right, as path commands.
void step_forward(std::string& d, const Panel& p, const std::vector<double>& t, const std::vector<double>& curve,
                  bool move) {
  fmt::format_to(std::back_inserter(d), "{}{} {}", move ? "M" : " L", num(p.X(t[0])), num(p.Y(curve[0])));
  for (std::size_t j = 1; j < t.size(); ++j) {
    fmt::format_to(std::back_inserter(d), " H{} V{}", num(p.X(t[j])), num(p.Y(curve[j])));
  }
  fmt::format_to(std::back_inserter(d), " H{}", num(p.X(p.xmax)));
}

void step_backward(std::string& d, const Panel& p, const std::vector<double>& t, const std::vector<double>& curve) {
  const std::size_t n = t.size();
  fmt::format_to(std::back_inserter(d), " V{}", num(p.Y(curve[n - 1])));
  for (std::size_t j = n - 1; j >= 1; --j) {
    fmt::format_to(std::back_inserter(d), " H{} V{}", num(p.X(t[j])), num(p.Y(curve[j - 1])));
  }
  fmt::format_to(std::back_inserter(d), " H{} Z", num(p.X(t[0])));
}

std::vector<double> row_of(const Surface& s, std::size_t i) {
  std::vector<double> out(s.nt());
  for (std::size_t j = 0; j < s.nt(); ++j) out[j] = s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

bool row_defined(const Surface& s, std::size_t i) {
  for (std::size_t j = 0; j < s.nt(); ++j) {
    if (!s.defined(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) return false;
  }
  return true;
}

// Row at exposure z, linearly interpolated between neighbouring grid rows.
std::vector<double> row_at(const Surface& s, double z) {
  auto it = std::lower_bound(s.z_grid.begin(), s.z_grid.end(), z);
  if (it == s.z_grid.end()) return row_of(s, s.nz() - 1);
  const auto hi = static_cast<std::size_t>(it - s.z_grid.begin());
  if (*it == z || hi == 0) return row_of(s, hi);
  const std::size_t lo = hi - 1;
  const double f = (z - s.z_grid[lo]) / (s.z_grid[hi] - s.z_grid[lo]);
  auto a = row_of(s, lo);
  const auto b = row_of(s, hi);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] += f * (b[j] - a[j]);
  return a;
}

std::string default_value_label(const Surface& s) {
  if (s.is_survival()) return "Survival probability";
  return s.estimand;
}

RenderOutput render_area(const Surface& s, const PlotSpec& spec) {
  RenderOutput out;
  std::vector<IndexRange> segments;
  try {
    segments = monotone_segments(s);
  } catch (const Error& e) {
    if (spec.facet == FacetMode::Off) throw Error(ErrorKind::NonMonotoneEffect, e.what());
    throw;
  }
  if (segments.size() > 1 && spec.facet == FacetMode::Off) {
    throw Error(ErrorKind::NonMonotoneEffect,
                fmt::format("the effect of the exposure changes direction ({} monotone segments); enable faceting or "
                            "use a contour plot",
                            segments.size()));
  }
  const bool binned = spec.kind == PlotKind::AreaBinned;
  const double zmin = s.z_grid.front(), zmax = s.z_grid.back();
  auto color_of = [&](double z) { return spec.color_scale.at(zmax > zmin ? (z - zmin) / (zmax - zmin) : 0.5); };

  ValueRange range;
  for (Eigen::Index i = 0; i < s.values.rows(); ++i)
    for (Eigen::Index j = 0; j < s.values.cols(); ++j)
      if (s.defined(i, j)) range.add(s.values(i, j));
  const auto [ylo, yhi] = range.padded(s.is_survival());

  Document doc(spec);
  auto panels = doc.panels(segments.size(), true);
  std::string csv = "facet,layer,z,t,value,color\n";
  std::set<std::string> extrapolated_notes;
  std::size_t masked_layers = 0;

  for (std::size_t f = 0; f < segments.size(); ++f) {
    auto& p = panels[f];
    p.xmin = 0.0;
    p.xmax = s.t_grid.back() > 0.0 ? s.t_grid.back() : 1.0;
    p.ymin = ylo;
    p.ymax = yhi;
    const auto seg = segments[f];

    // boundary curves and the exposure value each stands for
    std::vector<std::vector<double>> curves;
    std::vector<double> zs;
    std::vector<bool> extrapolated, defined;
    if (!binned) {
      for (std::size_t i = seg.first; i <= seg.last; ++i) {
        curves.push_back(row_of(s, i));
        zs.push_back(s.z_grid[i]);
        extrapolated.push_back(s.extrapolated[i]);
        defined.push_back(row_defined(s, i));
      }
    } else {
      const double a = s.z_grid[seg.first], b = s.z_grid[seg.last];
      for (int k = 0; k <= spec.bins; ++k) {
        const double z = k == spec.bins ? b : a + (b - a) * k / spec.bins;
        curves.push_back(row_at(s, z));
        zs.push_back(z);
        bool ex = false, def = true;
        for (std::size_t i = seg.first; i <= seg.last; ++i) {
          if (std::abs(s.z_grid[i] - z) <= (b - a) / spec.bins) {
            ex = ex || s.extrapolated[i];
            def = def && row_defined(s, i);
          }
        }
        extrapolated.push_back(ex);
        defined.push_back(def);
      }
    }

    fmt::format_to(std::back_inserter(doc.body()), "<g class=\"facet\" data-facet=\"{}\" data-z-first=\"{}\" data-z-last=\"{}\">\n",
                   f, csv::format_double(s.z_grid[seg.first]), csv::format_double(s.z_grid[seg.last]));
    if (curves.size() == 1) {
      // a single exposure value: draw its curve as a line
      std::string d;
      step_forward(d, p, s.t_grid, curves[0], true);
      fmt::format_to(std::back_inserter(doc.body()),
                     "<path class=\"layer\" data-layer=\"0\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", d,
                     color_of(zs[0]).hex());
    }
    auto layer_color = [&](std::size_t l) { return color_of(0.5 * (zs[l] + zs[l + 1])); };
    for (std::size_t l = 0; l + 1 < curves.size(); ++l) {
      const auto color = layer_color(l);
      std::string d;
      step_forward(d, p, s.t_grid, curves[l], true);
      step_backward(d, p, s.t_grid, curves[l + 1]);
      const bool ok = defined[l] && defined[l + 1];
      if (!ok) ++masked_layers;
      fmt::format_to(std::back_inserter(doc.body()),
                     "<path class=\"layer\" data-layer=\"{}\" data-z-lower=\"{}\" data-z-upper=\"{}\" d=\"{}\" "
                     "fill=\"{}\" stroke=\"{}\" stroke-width=\"0.3\"/>\n",
                     l, csv::format_double(zs[l]), csv::format_double(zs[l + 1]), d,
                     ok ? color.hex() : "url(#hatch)", ok ? color.hex() : "#666666");
      if (extrapolated[l] || extrapolated[l + 1]) {
        fmt::format_to(std::back_inserter(doc.body()),
                       "<path class=\"extrapolated\" d=\"{}\" fill=\"#ffffff\" fill-opacity=\"0.45\" stroke=\"none\"/>\n", d);
        extrapolated_notes.insert(fmt::format("{}..{}", label_num(zs[l]), label_num(zs[l + 1])));
      }
    }
    doc.body() += "</g>\n";
    // each boundary curve carries the fill of the layer above it; the top one the last fill
    for (std::size_t l = 0; l < curves.size(); ++l) {
      const std::size_t layer = std::min(l, curves.size() > 1 ? curves.size() - 2 : 0);
      const auto color = curves.size() == 1 ? color_of(zs[0]).hex() : layer_color(layer).hex();
      for (std::size_t j = 0; j < s.nt(); ++j) {
        csv += fmt::format("{},{},{},{},{},{}\n", f, l, csv::format_double(zs[l]), csv::format_double(s.t_grid[j]),
                           csv_value(curves[l][j], defined[l]), color);
      }
    }
    doc.axes(p, spec.x_label.empty() ? "Time" : spec.x_label,
             spec.y_label.empty() ? default_value_label(s) : spec.y_label, f == 0);
  }
  doc.legend(spec.color_scale, zmin, zmax, "Exposure");
  if (!extrapolated_notes.empty()) {
    std::string joined;
    for (const auto& n : extrapolated_notes) joined += (joined.empty() ? "" : ", ") + n;
    out.warnings.push_back("extrapolated exposure values (outside the observed range) in layers " + joined);
  }
  if (masked_layers > 0) out.warnings.push_back(fmt::format("{} layers contain undefined values and are hatched", masked_layers));
  if (segments.size() > 1) out.warnings.push_back(fmt::format("non-monotone effect: drawn as {} facets", segments.size()));
  out.svg = doc.finish();
  out.data_csv = std::move(csv);
  return out;
}

// Row edges of each z value: midpoints between neighbours, clamped to the grid ends.
std::vector<double> z_edges(const std::vector<double>& z) {
  std::vector<double> e(z.size() + 1);
  e.front() = z.front();
  e.back() = z.back();
  for (std::size_t i = 1; i < z.size(); ++i) e[i] = 0.5 * (z[i - 1] + z[i]);
  return e;
}

RenderOutput render_raster(const Surface& s, const PlotSpec& spec) {
  RenderOutput out;
  const bool contour = spec.kind == PlotKind::Contour;
  const bool zbinned = spec.kind == PlotKind::HeatmapBinned;

  ValueRange range;
  for (Eigen::Index i = 0; i < s.values.rows(); ++i)
    for (Eigen::Index j = 0; j < s.values.cols(); ++j)
      if (s.defined(i, j)) range.add(s.values(i, j));
  double vlo = 0.0, vhi = 1.0;
  if (!s.is_survival()) {
    vlo = std::isfinite(range.lo) ? range.lo : 0.0;
    vhi = std::isfinite(range.hi) ? range.hi : 1.0;
    if (vhi - vlo < 1e-12) {
      vlo -= 0.5;
      vhi += 0.5;
    }
  }
  auto unit = [&](double v) { return (v - vlo) / (vhi - vlo); };
  auto bin_of = [&](double v) {
    return std::clamp(static_cast<int>(std::floor(unit(v) * spec.bins)), 0, spec.bins - 1);
  };
  auto bin_color = [&](int b) { return spec.color_scale.at((b + 0.5) / spec.bins); };

  // rows to draw: every grid z, or z-bins averaging the rows they contain
  std::vector<double> row_z, row_lo, row_hi;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> row_def;
  std::vector<bool> row_ex;
  if (!zbinned) {
    const auto edges = z_edges(s.z_grid);
    for (std::size_t i = 0; i < s.nz(); ++i) {
      row_z.push_back(s.z_grid[i]);
      row_lo.push_back(edges[i]);
      row_hi.push_back(edges[i + 1]);
      rows.push_back(row_of(s, i));
      std::vector<bool> def(s.nt());
      for (std::size_t j = 0; j < s.nt(); ++j) def[j] = s.defined(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row_def.push_back(std::move(def));
      row_ex.push_back(s.extrapolated[i]);
    }
  } else {
    const double a = s.z_grid.front(), b = s.z_grid.back();
    for (int k = 0; k < spec.bins; ++k) {
      const double lo = a + (b - a) * k / spec.bins;
      const double hi = k + 1 == spec.bins ? b : a + (b - a) * (k + 1) / spec.bins;
      std::vector<double> sum(s.nt(), 0.0);
      std::vector<int> count(s.nt(), 0);
      bool ex = false;
      for (std::size_t i = 0; i < s.nz(); ++i) {
        const double z = s.z_grid[i];
        if (z < lo || z > hi || (z == hi && k + 1 != spec.bins)) continue;
        ex = ex || s.extrapolated[i];
        for (std::size_t j = 0; j < s.nt(); ++j) {
          if (!s.defined(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) continue;
          sum[j] += s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          ++count[j];
        }
      }
      std::vector<double> mean(s.nt());
      std::vector<bool> def(s.nt());
      for (std::size_t j = 0; j < s.nt(); ++j) {
        def[j] = count[j] > 0;
        mean[j] = def[j] ? sum[j] / count[j] : std::nan("");
      }
      row_z.push_back(0.5 * (lo + hi));
      row_lo.push_back(lo);
      row_hi.push_back(hi);
      rows.push_back(std::move(mean));
      row_def.push_back(std::move(def));
      row_ex.push_back(ex);
    }
  }

  Document doc(spec);
  auto p = doc.panels(1, true).front();
  p.xmin = 0.0;
  p.xmax = s.t_grid.back() > 0.0 ? s.t_grid.back() : 1.0;
  p.ymin = s.z_grid.front();
  p.ymax = s.z_grid.back() > s.z_grid.front() ? s.z_grid.back() : s.z_grid.front() + 1.0;

  std::string csv = contour ? "z,t,value,bin,color\n" : "z,t,value,color\n";
  std::size_t undefined_cells = 0;
  doc.body() += "<g class=\"cells\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y_top = p.Y(row_hi[r]);
    const double y_bottom = p.Y(row_lo[r]);
    // horizontal runs of identical colour
    std::size_t j = 0;
    while (j < s.nt()) {
      const bool def = row_def[r][j];
      std::string fill = "url(#hatch)";
      if (def) fill = contour ? bin_color(bin_of(rows[r][j])).hex() : spec.color_scale.at(unit(rows[r][j])).hex();
      std::size_t k = j;
      while (k < s.nt()) {
        const bool dk = row_def[r][k];
        std::string fk = "url(#hatch)";
        if (dk) fk = contour ? bin_color(bin_of(rows[r][k])).hex() : spec.color_scale.at(unit(rows[r][k])).hex();
        if (fk != fill) break;
        csv += contour ? fmt::format("{},{},{},{},{}\n", csv::format_double(row_z[r]), csv::format_double(s.t_grid[k]),
                                     csv_value(rows[r][k], dk), dk ? std::to_string(bin_of(rows[r][k])) : "NA", fk)
                       : fmt::format("{},{},{},{}\n", csv::format_double(row_z[r]), csv::format_double(s.t_grid[k]),
                                     csv_value(rows[r][k], dk), fk);
        if (!dk) ++undefined_cells;
        ++k;
      }
      const double x0 = p.X(s.t_grid[j]);
      const double x1 = k < s.nt() ? p.X(s.t_grid[k]) : p.X(p.xmax);
      if (x1 > x0 || k == s.nt()) {
        fmt::format_to(std::back_inserter(doc.body()),
                       "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"none\"/>\n",
                       num(x0), num(y_top), num(std::max(x1 - x0, 0.0)), num(std::max(y_bottom - y_top, 0.0)), fill);
      }
      j = k;
    }
    if (row_ex[r]) {
      fmt::format_to(std::back_inserter(doc.body()),
                     "<rect class=\"extrapolated\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" "
                     "fill-opacity=\"0.45\"/>\n",
                     num(p.left), num(y_top), num(p.width), num(std::max(y_bottom - y_top, 0.0)));
    }
  }
  doc.body() += "</g>\n";
  doc.axes(p, spec.x_label.empty() ? "Time" : spec.x_label, spec.y_label.empty() ? "Exposure" : spec.y_label, true);
  const std::string legend_title = s.is_survival() ? "Survival" : s.estimand;
  if (contour) {
    std::vector<Rgb> colors;
    std::vector<std::string> labels;
    for (int b = 0; b < spec.bins; ++b) {
      colors.push_back(bin_color(b));
      labels.push_back(fmt::format("[{}, {})", label_num(vlo + (vhi - vlo) * b / spec.bins),
                                   label_num(vlo + (vhi - vlo) * (b + 1) / spec.bins)));
    }
    doc.binned_legend(colors, labels, legend_title);
  } else {
    doc.legend(spec.color_scale, vlo, vhi, legend_title);
  }
  if (std::any_of(row_ex.begin(), row_ex.end(), [](bool b) { return b; })) {
    out.warnings.push_back("extrapolated exposure values (outside the observed range) are shaded");
  }
  if (undefined_cells > 0) out.warnings.push_back(fmt::format("{} undefined cells masked with hatching", undefined_cells));
  out.svg = doc.finish();
  out.data_csv = std::move(csv);
  return out;
}

RenderOutput render_curves(const CurveSet& set, const PlotSpec& spec, bool unit_y) {
  RenderOutput out;
  ValueRange xr, yr;
  for (const auto& c : set.curves) {
    if (c.x.size() != c.y.size()) throw Error(ErrorKind::InconsistentGrid, "curve '" + c.label + "' has mismatched x/y");
    for (double v : c.x) xr.add(v);
    for (std::size_t k = 0; k < c.y.size(); ++k) {
      if (c.defined.empty() || c.defined[k]) yr.add(c.y[k]);
    }
    if (spec.ci_band) {
      for (double v : c.lower) yr.add(v);
      for (double v : c.upper) yr.add(v);
    }
  }
  Document doc(spec);
  auto p = doc.panels(1, true).front();
  p.xmin = std::isfinite(xr.lo) ? xr.lo : 0.0;
  p.xmax = std::isfinite(xr.hi) && xr.hi > p.xmin ? xr.hi : p.xmin + 1.0;
  const auto [ylo, yhi] = yr.padded(unit_y);
  p.ymin = ylo;
  p.ymax = yhi;

  std::string csv = "curve,x,y,lower,upper\n";
  const auto n = set.curves.size();
  std::size_t undefined_points = 0;
  doc.body() += "<g class=\"curves\">\n";
  for (std::size_t ci = 0; ci < n; ++ci) {
    const auto& c = set.curves[ci];
    const std::string color =
        !c.color.empty() ? c.color : spec.color_scale.at(n > 1 ? static_cast<double>(ci) / (n - 1) : 0.5).hex();
    const bool band = spec.ci_band && c.lower.size() == c.x.size() && c.upper.size() == c.x.size() && !c.x.empty();
    if (band) {
      std::string d;
      if (c.step) {
        step_forward(d, p, c.x, c.upper, true);
        step_backward(d, p, c.x, c.lower);
      } else {
        for (std::size_t k = 0; k < c.x.size(); ++k)
          fmt::format_to(std::back_inserter(d), "{}{} {}", k ? " L" : "M", num(p.X(c.x[k])), num(p.Y(c.upper[k])));
        for (std::size_t k = c.x.size(); k-- > 0;)
          fmt::format_to(std::back_inserter(d), " L{} {}", num(p.X(c.x[k])), num(p.Y(c.lower[k])));
        d += " Z";
      }
      fmt::format_to(std::back_inserter(doc.body()),
                     "<path class=\"ci-band\" data-curve=\"{}\" d=\"{}\" fill=\"{}\" fill-opacity=\"{:.2f}\" stroke=\"none\"/>\n",
                     ci, d, color, 0.25 * spec.opacity);
    }
    // split into runs of defined points
    std::string d;
    bool pen_down = false;
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      const bool def = (c.defined.empty() || c.defined[k]) && std::isfinite(c.y[k]);
      if (!def) {
        ++undefined_points;
        pen_down = false;
        continue;
      }
      if (!pen_down) {
        fmt::format_to(std::back_inserter(d), "{}M{} {}", d.empty() ? "" : " ", num(p.X(c.x[k])), num(p.Y(c.y[k])));
        pen_down = true;
      } else if (c.step) {
        fmt::format_to(std::back_inserter(d), " H{} V{}", num(p.X(c.x[k])), num(p.Y(c.y[k])));
      } else {
        fmt::format_to(std::back_inserter(d), " L{} {}", num(p.X(c.x[k])), num(p.Y(c.y[k])));
      }
    }
    if (c.step && pen_down) fmt::format_to(std::back_inserter(d), " H{}", num(p.X(p.xmax)));
    if (!d.empty()) {
      fmt::format_to(std::back_inserter(doc.body()),
                     "<path class=\"curve\" data-curve=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" "
                     "stroke-opacity=\"{:.2f}\"/>\n",
                     ci, d, color, spec.opacity);
    }
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      const bool def = (c.defined.empty() || c.defined[k]) && std::isfinite(c.y[k]);
      csv += fmt::format("{},{},{},{},{}\n", csv_field(c.label), csv::format_double(c.x[k]),
                         csv_value(c.y[k], def), k < c.lower.size() ? csv_value(c.lower[k]) : "NA",
                         k < c.upper.size() ? csv_value(c.upper[k]) : "NA");
    }
  }
  doc.body() += "</g>\n";
  doc.axes(p, spec.x_label.empty() ? set.x_label : spec.x_label, spec.y_label.empty() ? set.y_label : spec.y_label, true);
  // legend: one swatch per curve
  {
    std::vector<Rgb> colors;
    std::vector<std::string> labels;
    for (std::size_t ci = 0; ci < n; ++ci) {
      const auto& c = set.curves[ci];
      colors.push_back(!c.color.empty() ? parse_hex_color(c.color)
                                        : spec.color_scale.at(n > 1 ? static_cast<double>(ci) / (n - 1) : 0.5));
      labels.push_back(c.label);
    }
    std::reverse(colors.begin(), colors.end());
    std::reverse(labels.begin(), labels.end());
    doc.binned_legend(colors, labels, "");
  }
  if (undefined_points > 0) {
    out.warnings.push_back(fmt::format("{} undefined points left out of the curves", undefined_points));
  }
  out.svg = doc.finish();
  out.data_csv = std::move(csv);
  return out;
}

std::vector<double> defaults_or(const std::vector<double>& v, std::vector<double> fallback) {
  return v.empty() ? fallback : v;
}

CurveSet summary_curves(const Surface& s, const PlotSpec& spec, bool& unit_y, std::vector<std::string>& warnings) {
  CurveSet set;
  set.x_label = "Exposure";
  const double tmax = s.t_grid.back();
  auto to_curve = [&](const std::vector<EstimandValue>& vals, const std::string& label) {
    Curve c;
    c.label = label;
    for (const auto& v : vals) {
      c.x.push_back(v.z);
      c.y.push_back(v.value);
      c.defined.push_back(v.defined);
    }
    return c;
  };
  switch (spec.kind) {
    case PlotKind::Landmark:
      unit_y = s.is_survival();
      set.y_label = s.is_survival() ? "Survival probability" : s.estimand;
      for (double t : defaults_or(spec.landmark_times, {0.25 * tmax, 0.5 * tmax, 0.75 * tmax})) {
        set.curves.push_back(to_curve(landmark(s, t), "t = " + label_num(t)));
      }
      break;
    case PlotKind::Quantile:
      unit_y = false;
      set.y_label = "Survival time quantile";
      for (double q : defaults_or(spec.quantile_probs, {0.5})) {
        auto c = to_curve(quantile_curve(s, q), "p = " + label_num(q));
        const auto missing = std::count(c.defined.begin(), c.defined.end(), false);
        if (missing > 0) {
          warnings.push_back(fmt::format("p = {}: quantile not reached within follow-up for {} exposure values",
                                         label_num(q), missing));
        }
        set.curves.push_back(std::move(c));
      }
      break;
    case PlotKind::Rmst:
      unit_y = false;
      set.y_label = "Restricted mean survival time";
      for (double l : defaults_or(spec.rmst_horizons, {tmax})) {
        set.curves.push_back(to_curve(rmst_curve(s, l), "lambda = " + label_num(l)));
      }
      break;
    default:
      break;
  }
  return set;
}

CurveSet value_curve_set(const Surface& s, const PlotSpec& spec) {
  CurveSet set;
  set.x_label = "Time";
  set.y_label = default_value_label(s);
  std::vector<std::size_t> picks;
  if (spec.values.empty()) {
    const std::size_t count = std::min<std::size_t>(5, s.nz());
    for (std::size_t k = 0; k < count; ++k) {
      picks.push_back(count > 1 ? k * (s.nz() - 1) / (count - 1) : 0);
    }
  } else {
    for (double z : spec.values) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < s.nz(); ++i) {
        if (std::abs(s.z_grid[i] - z) < std::abs(s.z_grid[best] - z)) best = i;
      }
      picks.push_back(best);
    }
  }
  const double zmin = s.z_grid.front(), zmax = s.z_grid.back();
  for (auto i : picks) {
    Curve c;
    c.label = "z = " + label_num(s.z_grid[i]);
    c.x = s.t_grid;
    c.y = row_of(s, i);
    for (std::size_t j = 0; j < s.nt(); ++j) c.defined.push_back(s.defined(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    c.step = true;
    c.color = spec.color_scale.at(zmax > zmin ? (s.z_grid[i] - zmin) / (zmax - zmin) : 0.5).hex();
    set.curves.push_back(std::move(c));
  }
  return set;
}

}  // namespace

RenderOutput render(const Surface& s, const PlotSpec& spec) {
  spec.check();
  s.check();
  switch (spec.kind) {
    case PlotKind::AreaContinuous:
    case PlotKind::AreaBinned:
      return render_area(s, spec);
    case PlotKind::Contour:
    case PlotKind::Heatmap:
    case PlotKind::HeatmapBinned:
      return render_raster(s, spec);
    case PlotKind::Landmark:
    case PlotKind::Quantile:
    case PlotKind::Rmst: {
      bool unit_y = false;
      std::vector<std::string> warnings;
      auto set = summary_curves(s, spec, unit_y, warnings);
      auto out = render_curves(set, spec, unit_y);
      out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
      return out;
    }
    case PlotKind::ValueCurves:
      return render_curves(value_curve_set(s, spec), spec, s.is_survival());
    case PlotKind::KMCurves:
    case PlotKind::ResidualScatter:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "plot kind '" + to_string(spec.kind) + "' does not take a surface");
}

RenderOutput render(const CurveSet& curves, const PlotSpec& spec) {
  spec.check();
  switch (spec.kind) {
    case PlotKind::Landmark:
    case PlotKind::ValueCurves:
    case PlotKind::KMCurves: {
      bool unit = true;
      for (const auto& c : curves.curves)
        for (double v : c.y)
          if (std::isfinite(v) && (v < 0.0 || v > 1.0)) unit = false;
      return render_curves(curves, spec, unit);
    }
    case PlotKind::Quantile:
    case PlotKind::Rmst:
      return render_curves(curves, spec, false);
    default:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "plot kind '" + to_string(spec.kind) + "' does not take curves");
}

RenderOutput render(const ScatterData& data, const PlotSpec& spec) {
  spec.check();
  if (spec.kind != PlotKind::ResidualScatter) {
    throw Error(ErrorKind::InvalidArgument, "plot kind '" + to_string(spec.kind) + "' does not take scatter data");
  }
  if (data.x.size() != data.y.size()) throw Error(ErrorKind::InconsistentGrid, "scatter x/y lengths differ");
  RenderOutput out;
  ValueRange xr, yr;
  for (double v : data.x) xr.add(v);
  for (double v : data.y) yr.add(v);
  for (double v : data.smooth.y) yr.add(v);
  Document doc(spec);
  auto p = doc.panels(1, false).front();
  const auto [xlo, xhi] = xr.padded(false);
  const auto [ylo, yhi] = yr.padded(false);
  p.xmin = xlo;
  p.xmax = xhi;
  p.ymin = ylo;
  p.ymax = yhi;
  std::string csv = "series,x,y\n";
  const auto point_color = spec.color_scale.at(0.0).hex();
  doc.body() += "<g class=\"points\">\n";
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    fmt::format_to(std::back_inserter(doc.body()),
                   "<circle cx=\"{}\" cy=\"{}\" r=\"1.8\" fill=\"{}\" fill-opacity=\"{:.2f}\"/>\n", num(p.X(data.x[i])),
                   num(p.Y(data.y[i])), point_color, 0.6 * spec.opacity);
    csv += fmt::format("residual,{},{}\n", csv::format_double(data.x[i]), csv::format_double(data.y[i]));
  }
  doc.body() += "</g>\n";
  if (!data.smooth.x.empty()) {
    std::string d;
    for (std::size_t k = 0; k < data.smooth.x.size(); ++k) {
      if (!std::isfinite(data.smooth.y[k])) continue;
      fmt::format_to(std::back_inserter(d), "{}{} {}", d.empty() ? "M" : " L", num(p.X(data.smooth.x[k])),
                     num(p.Y(data.smooth.y[k])));
      csv += fmt::format("smooth,{},{}\n", csv::format_double(data.smooth.x[k]), csv::format_double(data.smooth.y[k]));
    }
    fmt::format_to(std::back_inserter(doc.body()),
                   "<path class=\"smooth\" d=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n", d);
  }
  fmt::format_to(std::back_inserter(doc.body()),
                 "<line class=\"zero\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
                 num(p.left), num(p.Y(0.0)), num(p.left + p.width), num(p.Y(0.0)));
  doc.axes(p, spec.x_label.empty() ? data.x_label : spec.x_label, spec.y_label.empty() ? data.y_label : spec.y_label,
           true);
  out.svg = doc.finish();
  out.data_csv = std::move(csv);
  return out;
}

CurveSet km_curve_set(const std::vector<KMStratum>& strata, const std::vector<KMBand>& bands) {
  CurveSet set;
  set.x_label = "Time";
  set.y_label = "Survival probability";
  for (std::size_t k = 0; k < strata.size(); ++k) {
    Curve c;
    c.label = strata[k].label;
    c.step = true;
    c.x.push_back(0.0);
    c.y.push_back(1.0);
    const auto& knots = strata[k].curve.knots();
    const auto& values = strata[k].curve.values();
    c.x.insert(c.x.end(), knots.begin(), knots.end());
    c.y.insert(c.y.end(), values.begin(), values.end());
    if (k < bands.size()) {
      c.lower.push_back(1.0);
      c.upper.push_back(1.0);
      for (double t : knots) {
        c.lower.push_back(bands[k].lower(t));
        c.upper.push_back(bands[k].upper(t));
      }
    }
    set.curves.push_back(std::move(c));
  }
  return set;
}

}  // namespace contsurv
