#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mst {

/// Runs job(0..jobs-1) on up to `workers` threads in batches of `workers`:
/// the next batch starts once every job of the current one has finished.
/// The first exception thrown by a job is rethrown after its batch joins.
template <typename Job>
void run_batched(std::size_t jobs, std::size_t workers, Job&& job) {
    if (workers <= 1 || jobs <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) {
            job(i);
        }
        return;
    }
    for (std::size_t begin = 0; begin < jobs; begin += workers) {
        const std::size_t end = std::min(jobs, begin + workers);
        std::vector<std::exception_ptr> errors(end - begin);
        {
            std::vector<std::jthread> threads;
            threads.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                threads.emplace_back([&, i] {
                    try {
                        job(i);
                    } catch (...) {
                        errors[i - begin] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
}

} // namespace mst
