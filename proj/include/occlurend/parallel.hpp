// Deterministic fork-join helper. Work is split into fixed chunks assigned
// statically to workers, so the mapping of items to accumulation buffers
// depends only on (item count, worker count) and never on thread timing.
#pragma once

#include <cstdint>
#include <functional>

namespace occlurend {

// Worker count: OCCLUREND_THREADS if set (clamped to >= 1), else hardware.
int worker_count();

// Calls fn(worker, begin, end) for disjoint [begin, end) ranges covering
// [0, n). Worker w always receives the same range for a given (n, workers).
void parallel_ranges(int64_t n, const std::function<void(int worker, int64_t begin, int64_t end)>& fn);

}  // namespace occlurend
