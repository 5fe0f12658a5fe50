#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsoft/datagen.hpp"
#include "dsoft/tree.hpp"

namespace dsoft {

/// Simulation benchmark: replicated fits on simulated data, evaluated on one
/// fixed test set, against the intercept-only baseline.
struct BenchmarkConfig {
  std::string family = "NO";
  std::vector<std::size_t> sizes{500, 1000, 5000};
  int replications = 10;
  std::size_t test_n = 10000;
  std::uint64_t seed = kDefaultSeed;
  int jobs = 0;  // 0 = all cores
};

/// One tidy result row (long format, plot-ready).
struct BenchmarkRow {
  std::string family;
  std::size_t n = 0;
  int replication = 0;
  std::string model;   // "tree" or "intercept"
  std::string metric;  // "rmse_eta_mu", "crps", "log_score"
  double value = 0.0;
};

/// Replications run in parallel; rows come back in a fixed deterministic
/// order (size, replication, model, metric).  CRPS rows are emitted for
/// continuous families only.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& bench,
                                        const FitConfig& fit_cfg);

/// Median of `metric` over replications for one (n, model) cell.
double benchmark_median(const std::vector<BenchmarkRow>& rows, std::size_t n,
                        const std::string& model, const std::string& metric);

}  // namespace dsoft
