#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ringsim {

/// Worker count for OpenMP regions; 0 means the runtime default.
class ThreadCount {
 public:
  explicit ThreadCount(int requested) {
#ifdef _OPENMP
    value_ = requested > 0 ? requested : omp_get_max_threads();
#else
    value_ = 1;
    (void)requested;
#endif
  }
  int value() const { return value_; }

 private:
  int value_ = 1;
};

}  // namespace ringsim
