#include "contsurv/kaplan_meier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"
#include "contsurv/spline_basis.hpp"

namespace contsurv {

namespace {

struct EventTable {
  std::vector<double> time;
  std::vector<double> at_risk;
  std::vector<double> deaths;
};

// Counts at each distinct event time. Subjects censored at t_k stay in the
// risk set at t_k.
EventTable event_table(std::span<const double> times, std::span<const int> status) {
  if (times.size() != status.size()) throw Error(ErrorKind::ArityMismatch, "times and status lengths differ");
  std::map<double, std::pair<int, int>> counts;  // time -> (deaths, removed)
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto& c = counts[times[i]];
    c.first += status[i] == 1 ? 1 : 0;
    c.second += 1;
  }
  EventTable table;
  double at_risk = static_cast<double>(times.size());
  for (const auto& [t, c] : counts) {
    if (c.first > 0) {
      table.time.push_back(t);
      table.at_risk.push_back(at_risk);
      table.deaths.push_back(c.first);
    }
    at_risk -= c.second;
  }
  if (table.time.empty()) throw Error(ErrorKind::NoEvents, "Kaplan-Meier estimate needs at least one event");
  return table;
}

}  // namespace

StepFunction kaplan_meier(std::span<const double> times, std::span<const int> status) {
  const auto table = event_table(times, status);
  std::vector<double> values;
  double s = 1.0;
  for (std::size_t k = 0; k < table.time.size(); ++k) {
    s *= (table.at_risk[k] - table.deaths[k]) / table.at_risk[k];
    values.push_back(s);
  }
  return StepFunction(table.time, std::move(values), 1.0);
}

StepFunction kaplan_meier(const Dataset& d) {
  const auto t = d.times();
  const auto s = d.statuses();
  return kaplan_meier(t, s);
}

std::vector<KMStratum> stratified_km(const Dataset& d, std::span<const double> cutpoints) {
  const auto labels = interval_labels(cutpoints);
  std::vector<std::vector<double>> t(labels.size());
  std::vector<std::vector<int>> s(labels.size());
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto& r = d.records[i];
    auto idx = interval_index(r.exposure, cutpoints);
    if (!idx) {
      throw Error(ErrorKind::ValueOutsideAllIntervals, "row " + std::to_string(i) + ": exposure outside every interval");
    }
    t[*idx].push_back(r.time);
    s[*idx].push_back(r.status);
  }
  std::vector<KMStratum> out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (std::find(s[k].begin(), s[k].end(), 1) == s[k].end()) {
      throw Error(ErrorKind::EmptyStratum, labels[k]);
    }
    out.push_back({labels[k], kaplan_meier(t[k], s[k]), t[k].size()});
  }
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // Newton refinement against erfc
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

KMBand km_confidence_band(std::span<const double> times, std::span<const int> status, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0,1)");
  const auto table = event_table(times, status);
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<double> est, lo, hi;
  double s = 1.0;
  double greenwood = 0.0;
  for (std::size_t k = 0; k < table.time.size(); ++k) {
    const double n = table.at_risk[k];
    const double dk = table.deaths[k];
    s *= (n - dk) / n;
    est.push_back(s);
    if (s <= 0.0) {
      lo.push_back(0.0);
      hi.push_back(0.0);
      continue;
    }
    greenwood += dk / (n * (n - dk));
    const double se = std::sqrt(greenwood);
    lo.push_back(std::clamp(s * std::exp(-z * se), 0.0, 1.0));
    hi.push_back(std::clamp(s * std::exp(z * se), 0.0, 1.0));
  }
  KMBand band;
  band.estimate = StepFunction(table.time, std::move(est), 1.0);
  band.lower = StepFunction(table.time, std::move(lo), 1.0);
  band.upper = StepFunction(table.time, std::move(hi), 1.0);
  band.level = level;
  return band;
}

void write_km_csv(const KMBand& band, std::ostream& out) {
  out << "time,survival,ci_lower,ci_upper\n";
  out << "0,1,1,1\n";
  const auto& knots = band.estimate.knots();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    out << csv::format_double(knots[k]) << ',' << csv::format_double(band.estimate.values()[k]) << ','
        << csv::format_double(band.lower.values()[k]) << ',' << csv::format_double(band.upper.values()[k]) << '\n';
  }
}

}  // namespace contsurv
