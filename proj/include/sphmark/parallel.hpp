#pragma once

#include <cstddef>
#include <functional>

namespace sphmark {

/// Worker count: SPHMARK_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [begin, end). Iterations are split into contiguous
/// chunks, one per worker; each index is visited exactly once, so results
/// written to per-index slots are independent of the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace sphmark
