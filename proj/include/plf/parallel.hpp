#pragma once

#include <cstddef>
#include <functional>

namespace plf {

// Number of worker threads: PLF_THREADS if set (clamped to >= 1),
// otherwise the hardware concurrency.
unsigned thread_count();

// Runs fn over [0, n) split into contiguous chunks, one chunk per worker.
// Chunk boundaries depend only on n and the worker count, and each index is
// processed by exactly one worker, so output written per-index is identical
// to a serial run.
void parallel_for(size_t n, const std::function<void(size_t begin, size_t end)>& fn);

}  // namespace plf
