#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nsdual {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline double wall_time() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return 0.0;
#endif
}

/// Static-schedule parallel loop over [0, n).  Falls back to a plain loop
/// when OpenMP is absent or the trip count is below the grain.
template <class F>
void parallel_for(int n, int grain, F&& f) {
#ifdef _OPENMP
  if (n >= grain) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
#else
  (void)grain;
#endif
  for (int i = 0; i < n; ++i) f(i);
}

}  // namespace nsdual
