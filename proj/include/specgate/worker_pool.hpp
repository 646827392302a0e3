#pragma once

// Bounded fork-join over an index range.  Results are written by index, so
// the outcome does not depend on the width or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specgate {

inline int default_parallelism()
{
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

class WorkerPool {
public:
    explicit WorkerPool(int width = default_parallelism()) : width_(std::max(1, width)) {}

    int width() const { return width_; }

    // Calls f(i) for i in [0, count).  The exception thrown for the smallest
    // index is rethrown after all workers stop.
    template <class F>
    void parallel_for(std::size_t count, F&& f) const
    {
        if (count == 0) {
            return;
        }
        const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(width_), count);
        if (threads == 1) {
            for (std::size_t i = 0; i < count; ++i) {
                f(i);
            }
            return;
        }
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::mutex mu;
        std::size_t err_index = count;
        std::exception_ptr err;
        auto run = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) {
                    return;
                }
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (i < err_index) {
                        err_index = i;
                        err = std::current_exception();
                    }
                    failed = true;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(threads - 1);
        for (std::size_t t = 1; t < threads; ++t) {
            pool.emplace_back(run);
        }
        run();
        for (auto& t : pool) {
            t.join();
        }
        if (err) {
            std::rethrow_exception(err);
        }
    }

private:
    int width_;
};

} // namespace specgate
