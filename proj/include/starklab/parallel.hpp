#pragma once

#if defined(STARKLAB_HAVE_OPENMP)
#include <omp.h>
#endif

#include <thread>

namespace starklab {

/// Worker count for a `jobs` knob: values <= 0 mean "all available cores".
inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
#if defined(STARKLAB_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
#endif
}

inline bool openmp_enabled() {
#if defined(STARKLAB_HAVE_OPENMP)
  return true;
#else
  return false;
#endif
}

}  // namespace starklab
