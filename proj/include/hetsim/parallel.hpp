#pragma once

#include <cstddef>
#include <functional>

namespace hetsim {

// Worker count: HETSIM_THREADS if set and positive, else hardware concurrency (at least 1).
std::size_t worker_threads();

// Runs body(i) for i in [0, n) on up to worker_threads() threads. Callers write
// results into slot i so reductions can happen afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hetsim
