#pragma once

#include <span>
#include <vector>

namespace contsurv {

// Right-continuous piecewise-constant function: f(t) is the value at the
// largest knot <= t, or value_before_first when t precedes every knot.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double value_before_first);

  double operator()(double t) const;
  std::vector<double> evaluate(std::span<const double> ts) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double value_before_first() const { return value_before_first_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double value_before_first_ = 0.0;
};

}  // namespace contsurv
