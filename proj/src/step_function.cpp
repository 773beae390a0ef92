#include "contsurv/step_function.hpp"

#include <algorithm>
#include <cmath>

#include "contsurv/error.hpp"

namespace contsurv {

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double value_before_first)
    : knots_(std::move(knots)), values_(std::move(values)), value_before_first_(value_before_first) {
  if (knots_.size() != values_.size()) {
    throw Error(ErrorKind::InvalidArgument, "step function needs one value per knot");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i])) throw Error(ErrorKind::InvalidArgument, "step function knots must be finite");
    if (i > 0 && !(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "step function knots must be strictly ascending");
    }
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return value_before_first_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

std::vector<double> StepFunction::evaluate(std::span<const double> ts) const {
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back((*this)(t));
  return out;
}

}  // namespace contsurv
