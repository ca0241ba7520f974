#pragma once

// Deterministic fork-join over an index range. Work items write to
// preallocated slots, so output does not depend on scheduling order.

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace floq {

inline void parallel_for(int n, const std::function<void(int)>& body, int n_threads = 0) {
    if (n <= 0) return;
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    std::exception_ptr error;
    std::mutex error_mx;
    for (int w = 0; w < n_threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mx);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace floq
