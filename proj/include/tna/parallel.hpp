#pragma once

#include <functional>

namespace tna {

/// Runs fn(0..n-1) across `threads` workers (0 = hardware concurrency).
/// Each index owns its output slot, so results are deterministic no matter
/// how the indices are scheduled. The first exception thrown by any worker
/// is rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace tna
