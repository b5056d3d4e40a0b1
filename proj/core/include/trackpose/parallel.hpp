#pragma once

#include <cstddef>
#include <functional>

namespace trackpose {

/// Worker count: TRACKPOSE_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_limit();

/// Calls fn(i) for i in [0, n) on up to thread_limit() threads. Each index is
/// handled exactly once; results written per index stay deterministic. The
/// first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace trackpose
