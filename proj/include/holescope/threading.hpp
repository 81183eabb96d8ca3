#pragma once

#include <cstddef>
#include <functional>

namespace holescope {

/// Worker count: min(hardware_concurrency, HOLESCOPE_THREADS) when the
/// environment variable is set, hardware_concurrency otherwise. At least 1.
int max_threads();

/// Runs chunk_fn(begin, end) over a static partition of [0, n) using up to
/// `threads` workers. Callers must write to disjoint output slots; results are
/// then independent of the worker count. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& chunk_fn);

}  // namespace holescope
