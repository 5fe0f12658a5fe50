#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsoft {

/// Execution policy for the batch kernels. Every kernel has a plain serial
/// loop and an OpenMP row-parallel loop over the same per-element code, so
/// both policies produce bitwise identical results; `serial` is kept as the
/// reference implementation for tests and benchmarking.
enum class Exec { serial, parallel };

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Apply fn(i) for i in [0, n). With Exec::parallel the iterations run under
/// OpenMP; fn must only write to its own slot i (no reductions inside), which
/// keeps results independent of scheduling.
template <typename F>
void parallel_for(std::size_t n, Exec exec, F&& fn) {
  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// Same shape but with a caller-chosen thread count (used for coarse-grained
/// work such as ensemble members or benchmark replications). jobs <= 0 means
/// the OpenMP default.
template <typename F>
void parallel_for_jobs(std::size_t n, int jobs, F&& fn) {
#ifdef _OPENMP
  if (jobs != 1) {
    if (jobs <= 0) jobs = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)jobs;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace dsoft
