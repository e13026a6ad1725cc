#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace storyaug {

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs f(i) for i in [0, n) across OpenMP threads. If any call throws, the
/// exception of the smallest failing index is rethrown after the loop, so the
/// reported error does not depend on scheduling.
template <class F> void parallel_for(std::size_t n, F &&f, bool dynamic = false) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
    if (dynamic) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                f(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                f(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace storyaug
