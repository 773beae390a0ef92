#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "contsurv/dataset.hpp"
#include "contsurv/step_function.hpp"

namespace contsurv {

// Product-limit estimate; value_before_first is 1 and a knot sits at every
// distinct event time.
StepFunction kaplan_meier(std::span<const double> times, std::span<const int> status);
StepFunction kaplan_meier(const Dataset& d);

struct KMStratum {
  std::string label;  // interval label such as "(0.5,0.7]"
  StepFunction curve;
  std::size_t n = 0;
};

// One curve per exposure interval (see categorize).
std::vector<KMStratum> stratified_km(const Dataset& d, std::span<const double> cutpoints);

struct KMBand {
  StepFunction estimate;
  StepFunction lower;
  StepFunction upper;
  double level = 0.95;
};

// Pointwise intervals exp(log S +- z * se) with Greenwood's variance of log S,
// clipped to [0, 1].
KMBand km_confidence_band(std::span<const double> times, std::span<const int> status, double level = 0.95);

// Columns time,survival,ci_lower,ci_upper at every knot (plus t = 0).
void write_km_csv(const KMBand& band, std::ostream& out);

// Standard normal quantile (Acklam's rational approximation with one Newton refinement).
double normal_quantile(double p);

}  // namespace contsurv
