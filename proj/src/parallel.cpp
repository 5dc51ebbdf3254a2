#include "crowd/parallel.hpp"

namespace crowd {

int available_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace crowd
