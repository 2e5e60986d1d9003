#pragma once

#include <cstddef>
#include <functional>

namespace trajex {

/// Worker count: TRAJEX_THREADS when set (>= 1), else hardware concurrency.
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Results must be
/// written to per-index slots so output order does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace trajex
