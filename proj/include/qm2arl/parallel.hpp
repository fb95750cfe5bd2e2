#pragma once

#include <functional>

namespace qm2arl {

// Worker count: QM2ARL_THREADS if set (0 or unset = hardware concurrency).
int thread_count();

// Runs fn(0..n-1) across up to thread_count() threads. Each index must write
// only its own outputs; callers reduce in a fixed order afterwards, so results
// are identical to the sequential run. Exceptions propagate to the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace qm2arl
