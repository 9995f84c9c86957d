#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace srload {

/*!
 * Run fn(chunk) for chunk in [0, n_chunks) on up to `workers` threads.
 *
 * Work assignment is dynamic but each chunk owns its output slot and its RNG
 * stream, so results do not depend on the worker count.
 */
template<class Fn>
void for_each_chunk(std::size_t n_chunks, int workers, Fn&& fn)
{
    const auto n_threads = static_cast<std::size_t>(
        std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(n_chunks, 1)));
    if (n_threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < n_chunks; c = next++) {
                    try {
                        fn(c);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace srload
