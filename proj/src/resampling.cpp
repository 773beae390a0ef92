#include "contsurv/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "contsurv/error.hpp"
#include "contsurv/parallel.hpp"
#include "contsurv/spline_basis.hpp"

namespace contsurv {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t replicate) {
  std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ splitmix64(0xB007ULL + replicate)));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) {
    // Lemire's multiply-shift range reduction
    const auto wide = static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(n);
    i = static_cast<std::size_t>(wide >> 64);
  }
  return idx;
}

EstimateWithCI summarize_replicates(double point, std::vector<double> replicates, double level) {
  EstimateWithCI e;
  e.point = point;
  e.level = level;
  const auto m = replicates.size();
  if (m < 2) throw Error(ErrorKind::TooManyFailures, "fewer than two successful replicates");
  // deviations from the first replicate keep a constant sample exactly at se = 0
  const double shift = replicates.front();
  double mean = 0.0;
  for (double v : replicates) mean += v - shift;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : replicates) ss += (v - shift - mean) * (v - shift - mean);
  e.se = std::sqrt(ss / static_cast<double>(m - 1));
  const double alpha = 1.0 - level;
  e.ci_lower = quantile_type7(replicates, alpha / 2.0);
  e.ci_upper = quantile_type7(std::move(replicates), 1.0 - alpha / 2.0);
  return e;
}

std::vector<EstimateWithCI> bootstrap(const Dataset& d, const VectorPipeline& pipeline,
                                      const BootstrapOptions& options) {
  if (options.n_boot < 2) throw Error(ErrorKind::InvalidArgument, "n_boot must be >= 2");
  if (!(options.level > 0.0 && options.level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0,1)");

  const auto point = pipeline(d);
  const std::size_t k = point.size();

  std::vector<std::vector<double>> results(options.n_boot);
  std::vector<char> failed(options.n_boot, 0);
  parallel_for(options.n_boot, resolve_threads(options.threads), [&](std::size_t r) {
    const auto sample = d.subset(resample_indices(d.n(), options.seed, r));
    try {
      auto v = pipeline(sample);
      if (v.size() != k) {
        throw Error(ErrorKind::PipelineError,
                    fmt::format("replicate {}: pipeline returned {} values, expected {}", r, v.size(), k));
      }
      if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); })) {
        failed[r] = 1;
        return;
      }
      results[r] = std::move(v);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::PipelineError) throw;
      failed[r] = 1;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::PipelineError, fmt::format("replicate {}: {}", r, e.what()));
    }
  });

  const auto n_failed = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  if (static_cast<double>(n_failed) > options.max_failure_fraction * static_cast<double>(options.n_boot)) {
    throw Error(ErrorKind::TooManyFailures, fmt::format("{} of {} replicates failed", n_failed, options.n_boot));
  }

  std::vector<EstimateWithCI> out;
  for (std::size_t e = 0; e < k; ++e) {
    std::vector<double> values;
    values.reserve(options.n_boot);
    for (std::size_t r = 0; r < options.n_boot; ++r) {
      if (!failed[r]) values.push_back(results[r][e]);
    }
    auto summary = summarize_replicates(point[e], std::move(values), options.level);
    summary.n_boot = options.n_boot;
    summary.n_failed = n_failed;
    out.push_back(summary);
  }
  return out;
}

EstimateWithCI bootstrap(const Dataset& d, const ScalarPipeline& pipeline, const BootstrapOptions& options) {
  VectorPipeline wrapped = [&](const Dataset& sample) { return std::vector<double>{pipeline(sample)}; };
  return bootstrap(d, wrapped, options).front();
}

}  // namespace contsurv
