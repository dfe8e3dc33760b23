#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lvcd {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Dynamic work queue: calls fn(i) for every i in [0, count) across up to
// `workers` threads.  fn must be safe to run concurrently for distinct i.
// The first exception thrown by any call is rethrown after all threads stop.
inline void parallel_for(long count, int workers, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    workers = static_cast<int>(std::min<long>(resolve_workers(workers), count));
    if (workers <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace lvcd
