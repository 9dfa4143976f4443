#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evex {

// Execution policy for the data-parallel kernels. Serial is the reference
// implementation; the OpenMP path must agree with it within float rounding
// (per-item work is identical, only reduction order differs).
struct ExecPolicy {
  bool parallel = true;
  int num_threads = 0;  // 0 = OpenMP default

  static ExecPolicy serial() { return ExecPolicy{false, 1}; }
  static ExecPolicy omp(int threads = 0) { return ExecPolicy{true, threads}; }

  int resolved_threads() const {
#ifdef _OPENMP
    if (!parallel) return 1;
    return num_threads > 0 ? num_threads : omp_get_max_threads();
#else
    return 1;
#endif
  }
};

}  // namespace evex
