#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace gldfit {

/// Runs body(i) for i in [0, n).  Work items must be independent and handle
/// their own exceptions; results keyed by index stay schedule-independent no
/// matter how many workers run.
inline void parallel_for_index(std::size_t n, unsigned threads,
                               const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace gldfit
