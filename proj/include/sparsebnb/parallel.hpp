#ifndef SPARSEBNB_PARALLEL_HPP_
#define SPARSEBNB_PARALLEL_HPP_

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>

#include "sparsebnb/types.hpp"

namespace sparsebnb::parallel {

// Rows of a batch are processed in fixed-size chunks. The chunk layout depends only on
// the batch, never on the worker count, so every row sees the same floating point
// operations whatever the number of threads.
inline constexpr Index kRowChunk = 8;

inline void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Calls fn(begin, end) for consecutive row ranges [begin, end) covering [0, rows).
template <typename Fn>
void for_each_chunk(Index rows, Fn&& fn, Index chunk = kRowChunk) {
    const Index chunks = (rows + chunk - 1) / chunk;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (chunks > 1)
#endif
    for (Index c = 0; c < chunks; ++c) {
        const Index begin = c * chunk;
        const Index end = std::min(rows, begin + chunk);
        fn(begin, end);
    }
}

}  // namespace sparsebnb::parallel

#endif  // SPARSEBNB_PARALLEL_HPP_
