#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ember {

inline int default_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Splits [0, n) into `threads` contiguous chunks and runs
/// body(begin, end, worker) on each. Chunk boundaries depend only on
/// (n, threads), so per-worker partial results merged in worker order are
/// reproducible for a fixed worker count. The first exception thrown by any
/// worker is rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
    if (n == 0) return;
    threads = std::max(1, threads);
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers == 1) {
        body(std::size_t{0}, n, 0);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto guarded = [&](std::size_t begin, std::size_t end, int w) {
        try {
            body(begin, end, w);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) first_error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&guarded, begin, end, w] { guarded(begin, end, static_cast<int>(w)); });
    }
    guarded(std::size_t{0}, std::min(n, chunk), 0);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Scatter helper: each worker accumulates into its own Accumulator; the
/// partial results are merged serially in worker order (bitwise deterministic
/// for a fixed worker count).
template <class Accumulator, class F, class Merge>
void parallel_scatter(std::size_t n, int threads, std::vector<Accumulator>& partials,
                      F&& body, Merge&& merge) {
    threads = std::max(1, threads);
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));
    partials.resize(workers);
    parallel_for(n, static_cast<int>(workers), [&](std::size_t begin, std::size_t end, int w) {
        for (std::size_t i = begin; i < end; ++i) body(partials[static_cast<std::size_t>(w)], i);
    });
    for (std::size_t w = 0; w < workers; ++w) merge(partials[w]);
}

} // namespace ember
