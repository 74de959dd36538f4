#include "mixopt/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixopt {

int resolve_threads(int requested) {
#ifdef _OPENMP
  if (requested > 0) return requested;
  return omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

}  // namespace mixopt
