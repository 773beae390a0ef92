#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <random>
#include <vector>

#include <doctest.h>

#include "contsurv/dataset.hpp"
#include "contsurv/error.hpp"

namespace testing {

inline contsurv::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const contsurv::Error& e) {
    return e.kind();
  }
  FAIL("expected a contsurv::Error");
  return contsurv::ErrorKind::InvalidArgument;
}

#define CHECK_KIND(expr, k) CHECK(::testing::kind_of([&] { (void)(expr); }) == ::contsurv::ErrorKind::k)

inline contsurv::Dataset make_dataset(const std::vector<double>& time, const std::vector<int>& status,
                                      const std::vector<double>& z,
                                      const std::vector<std::vector<double>>& x = {}) {
  contsurv::Dataset d;
  d.exposure_name = "z";
  if (!x.empty()) {
    for (std::size_t j = 0; j < x.front().size(); ++j) d.confounder_names.push_back("x" + std::to_string(j + 1));
  }
  for (std::size_t i = 0; i < time.size(); ++i) {
    d.records.push_back({time[i], status[i], z[i], x.empty() ? std::vector<double>{} : x[i]});
  }
  return d;
}

// (1,event,z=1) (2,event,z=0) (3,event,z=1) (4,censored,z=0)
inline contsurv::Dataset four_subjects() { return make_dataset({1, 2, 3, 4}, {1, 1, 1, 0}, {1, 0, 1, 0}); }

// Random right-censored data with one or more confounders.
inline contsurv::Dataset random_dataset(std::size_t n, std::size_t confounders, unsigned seed, bool ties = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::exponential_distribution<double> expo(1.0);
  contsurv::Dataset d;
  d.exposure_name = "z";
  for (std::size_t j = 0; j < confounders; ++j) d.confounder_names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    contsurv::SubjectRecord r;
    for (std::size_t j = 0; j < confounders; ++j) r.confounders.push_back(norm(rng));
    r.exposure = norm(rng) + (confounders ? 0.5 * r.confounders[0] : 0.0);
    const double lp = -0.5 * r.exposure + (confounders ? 0.4 * r.confounders[0] : 0.0);
    double t = expo(rng) / (0.2 * std::exp(lp));
    const double c = expo(rng) / 0.05;
    r.status = t <= c ? 1 : 0;
    t = std::min(t, c);
    if (ties) t = std::ceil(t);
    r.time = std::max(t, 1e-6);
    d.records.push_back(r);
  }
  d.records[0].status = 1;
  return d;
}

}  // namespace testing
