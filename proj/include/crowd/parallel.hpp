#pragma once

#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crowd {

// How a kernel runs its independent work units. Serial is the reference path;
// both must produce bit-identical results because every unit writes its own
// slot and reductions happen afterwards in index order.
struct Exec {
    bool parallel = true;
    int threads = 0;  // 0 = OpenMP default

    static Exec serial() { return {false, 1}; }
    static Exec with_threads(int n) { return {n != 1, n}; }
};

int available_threads() noexcept;

template <class F>
void for_each_index(std::size_t n, const Exec& ex, F&& f) {
    if (!ex.parallel || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
#ifdef _OPENMP
    // Keep the exception from the lowest index so failures are reproducible too.
    std::exception_ptr err;
    std::size_t err_at = std::numeric_limits<std::size_t>::max();
    std::mutex mu;
    const long long count = static_cast<long long>(n);
    const int nt = ex.threads > 0 ? ex.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (long long i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (static_cast<std::size_t>(i) < err_at) {
                err_at = static_cast<std::size_t>(i);
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
#else
    for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace crowd
