#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace ckam {

/// Deterministic parallel map over [0, count): each index is processed exactly
/// once; with threads <= 1 this is a plain loop.
template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
    if (threads <= 1 || count < 64) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(std::size_t(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += nt) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace ckam
