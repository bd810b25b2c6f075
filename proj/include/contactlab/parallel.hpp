#pragma once

#include <cstddef>
#include <functional>

namespace contactlab {

/// Worker count: CONTACTLAB_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
/// store results by index, so the merge order never depends on scheduling.
/// body must not throw. Calls nested inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace contactlab
