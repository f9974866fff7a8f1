#pragma once

// Deterministic fan-out over path indices. Results land in a vector indexed by
// path, so any later reduction in index order is independent of the number of
// workers and of scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "qflag/error.hpp"

namespace qflag {

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// out[i] = f(i) for i in [0, count), using `workers` threads.
/// The first failure (lowest path index) is rethrown as an Error naming the path.
template <class F>
auto parallel_map(std::size_t count, unsigned workers, F&& f) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<R> out(count);
    workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(count, 1)));

    std::atomic<std::size_t> next{0};
    std::mutex err_mtx;
    std::size_t err_index = count;
    std::string err_what;

    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                out[i] = f(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mtx);
                if (i < err_index) {
                    err_index = i;
                    err_what = e.what();
                }
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err_index < count) throw Error("worker failure at path " + std::to_string(err_index) + ": " + err_what);
    return out;
}

}  // namespace qflag
