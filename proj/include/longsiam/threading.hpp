#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace longsiam {

/// Resolves a requested worker count: 0 means "decide for me", falling back
/// to LONGSIAM_THREADS and then to the hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LONGSIAM_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace threads {

inline int& count_ref() {
    static int count = resolve_threads(0);
    return count;
}

inline void set_count(int n) { count_ref() = n > 0 ? n : resolve_threads(0); }
inline int count() { return count_ref(); }

}  // namespace threads

/// Static-chunked parallel loop over [0, n). Each index is processed exactly
/// once and tasks must write disjoint outputs, so results are independent of
/// the worker count; reductions stay deterministic as long as each task
/// accumulates in its own index order.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
    const int workers = std::min<int64_t>(threads::count(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int64_t lo = w * chunk;
        const int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace longsiam
