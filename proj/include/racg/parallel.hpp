#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace racg {

/// Calls fn(i) for every i in [0, n) on at most `max_in_flight` threads.
/// Callers write results into pre-sized slots, so output order never depends
/// on scheduling. The first exception thrown by fn is rethrown after all
/// workers have joined.
template <class Fn>
void parallel_for(std::size_t n, std::size_t max_in_flight, Fn&& fn)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min(max_in_flight, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace racg
