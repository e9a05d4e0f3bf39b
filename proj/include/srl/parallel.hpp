#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace srl {

/// Worker count for per-sample loops. Defaults to 1; SRL_THREADS raises the
/// bound (capped at hardware concurrency).
inline unsigned thread_budget() {
    const char* env = std::getenv("SRL_THREADS");
    if (!env) return 1;
    long n = std::strtol(env, nullptr, 10);
    if (n < 1) return 1;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<unsigned>(n) < hw ? static_cast<unsigned>(n) : hw;
}

/// Run fn(i) for i in [0, n). Results must not depend on execution order;
/// callers derive per-index RNG streams to stay deterministic.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = thread_budget();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace srl
