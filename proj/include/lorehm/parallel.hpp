#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lorehm {

// Runs body(i) for i in [0, count) on up to `workers` threads. The first
// exception stops further indices from being claimed and is rethrown after
// all threads join.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        while (!failed.load()) {
            const auto i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    std::vector<std::jthread> threads;
    const auto n = workers < count ? workers : count;
    threads.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        threads.emplace_back(run);
    }
    threads.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace lorehm
