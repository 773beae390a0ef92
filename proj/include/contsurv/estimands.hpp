#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "contsurv/cox_ph.hpp"
#include "contsurv/dataset.hpp"
#include "contsurv/step_function.hpp"
#include "contsurv/surface.hpp"

namespace contsurv {

struct EstimandValue {
  double value = 0.0;
  double t = 0.0;
  double z = 0.0;
  bool defined = true;
};

// S_z(t*) for every z of the surface.
std::vector<EstimandValue> landmark(const Surface& s, double t_star);

// Q_z(p): smallest grid time with S_z(t) <= p; undefined when never reached
// within follow-up.
std::vector<EstimandValue> quantile_curve(const Surface& s, double p);

// Exact integral of the step curve S_z over [0, lambda].
std::vector<EstimandValue> rmst_curve(const Surface& s, double lambda);

enum class ContrastKind { Difference, Ratio };

// Reference is either a fixed exposure value tau or the observed survival
// curve (Kaplan-Meier).
struct ContrastSpec {
  ContrastKind kind = ContrastKind::Difference;
  std::optional<double> tau;  // nullopt = observed_km

  static ContrastSpec fixed(ContrastKind kind, double tau) { return {kind, tau}; }
  static ContrastSpec observed_km(ContrastKind kind) { return {kind, std::nullopt}; }
  std::string label() const;
};

// Elementwise reference - S_z (difference) or reference / S_z (ratio) where
// `reference` holds the reference curve on the surface's t grid.
ContrastSurface contrast_with_reference(const Surface& s, ContrastKind kind, std::span<const double> reference,
                                        const std::string& label);

// Observed-survival reference. Throws MissingKMReference when km is absent;
// fixed-tau specs need the overload that can evaluate S_tau.
ContrastSurface contrast_surface(const Surface& s, const ContrastSpec& spec, const std::optional<StepFunction>& km);

// Fixed tau: S_tau comes from one more g-computation pass at exactly tau.
// Observed reference: Kaplan-Meier of `d`.
ContrastSurface contrast_surface(const Surface& s, const ContrastSpec& spec, const CoxFit& fit, const Dataset& d);

// Long CSV: z,t,value,defined,estimand.
void write_estimand_csv(const std::vector<EstimandValue>& values, const std::string& estimand, std::ostream& out,
                        bool header = true);

}  // namespace contsurv
