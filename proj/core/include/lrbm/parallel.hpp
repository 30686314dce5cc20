#pragma once

#include <cstddef>
#include <functional>

namespace lrbm {

/// Worker cap: LRBM_THREADS when set to a positive integer, else the hardware concurrency.
int worker_count();

/// Runs body(0) ... body(n-1) on up to worker_count() threads. Each index writes only
/// its own output slot, so results do not depend on scheduling. The first exception
/// thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lrbm
