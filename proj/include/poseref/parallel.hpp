#pragma once

#if defined(_OPENMP)
#include <omp.h>
#define POSEREF_PRAGMA_OMP(directive) _Pragma(#directive)
#else
#define POSEREF_PRAGMA_OMP(directive)
#endif

namespace poseref {

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace poseref
