#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lhop {

/// Execution policy for the data-parallel kernels (terrain fill, batched MLP
/// passes). Serial is the reference path; Parallel runs the same arithmetic
/// under OpenMP with a loop structure chosen so results are bit-identical to
/// the reference regardless of thread count.
enum class Exec { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace lhop
