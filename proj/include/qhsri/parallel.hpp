#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace qhsri {

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on up to
/// `threads` threads. Chunk boundaries depend only on n and threads; callers
/// write results by index so output never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t t = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
    if (t == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t k = 0; k < t; ++k) {
        const std::size_t begin = k * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
}

}  // namespace qhsri
