#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace wasgd {

inline std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Computes `compute(i)` for i in [0, count) on up to `workers` threads and
/// hands each result to `consume(i, result)` strictly in index order.
///
/// Work is processed in windows whose size does not depend on `workers`, and
/// consumption order is fixed, so any order-sensitive reduction performed in
/// `consume` gives bit-identical results for every worker count. If a
/// computation throws, the exception from the lowest failing index is
/// rethrown after the window drains.
template <class Compute, class Consume>
void ordered_map_reduce(std::size_t count, std::size_t workers, Compute&& compute,
                        Consume&& consume, std::size_t window = 64) {
    using Result = decltype(compute(std::size_t{0}));
    workers = std::max<std::size_t>(1, workers);
    window = std::max<std::size_t>(1, window);

    for (std::size_t begin = 0; begin < count; begin += window) {
        const std::size_t end = std::min(count, begin + window);
        std::vector<std::optional<Result>> results(end - begin);
        std::vector<std::exception_ptr> errors(end - begin);

        auto run_slot = [&](std::size_t slot) {
            try {
                results[slot].emplace(compute(begin + slot));
            } catch (...) {
                errors[slot] = std::current_exception();
            }
        };

        const std::size_t threads = std::min(workers, end - begin);
        if (threads <= 1) {
            for (std::size_t slot = 0; slot < end - begin; ++slot) run_slot(slot);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(threads);
            for (std::size_t t = 0; t < threads; ++t) {
                pool.emplace_back([&, t] {
                    for (std::size_t slot = t; slot < end - begin; slot += threads) run_slot(slot);
                });
            }
            for (auto& th : pool) th.join();
        }

        for (std::size_t slot = 0; slot < end - begin; ++slot) {
            if (errors[slot]) std::rethrow_exception(errors[slot]);
            consume(begin + slot, std::move(*results[slot]));
        }
    }
}

}  // namespace wasgd
