#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "contsurv/dataset.hpp"

namespace contsurv {

struct EstimateWithCI {
  double point = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
  std::size_t n_boot = 0;
  std::size_t n_failed = 0;
};

struct BootstrapOptions {
  std::size_t n_boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double max_failure_fraction = 0.10;
};

// The whole analysis, from raw data to estimands; rerun on every resample.
using ScalarPipeline = std::function<double(const Dataset&)>;
using VectorPipeline = std::function<std::vector<double>(const Dataset&)>;

// Nonparametric bootstrap with percentile intervals. Replicate r draws its
// indices from a generator seeded by (seed, r), so results do not depend on
// the worker count or schedule. Replicates whose pipeline throws a library
// Error or yields a non-finite value are excluded and counted.
std::vector<EstimateWithCI> bootstrap(const Dataset& d, const VectorPipeline& pipeline,
                                      const BootstrapOptions& options);
EstimateWithCI bootstrap(const Dataset& d, const ScalarPipeline& pipeline, const BootstrapOptions& options);

// Resampled record indices of replicate r.
std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t replicate);

// Summary of replicate values: sample standard deviation and type-7 percentile bounds.
EstimateWithCI summarize_replicates(double point, std::vector<double> replicates, double level);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace contsurv
