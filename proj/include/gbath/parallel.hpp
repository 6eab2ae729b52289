#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace gbath {

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint, so results
// do not depend on the worker count as long as fn writes only inside its own range.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w = static_cast<std::size_t>(std::max(1, workers));
    if (w == 1 || n < 2048) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + w - 1) / w;
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b < n; b += chunk) {
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace gbath
