#pragma once

#include <cstddef>
#include <functional>

namespace tac {

/// Worker count used by data-parallel kernels (default 1).
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Calls fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and the thread count, and callers write results per
/// index and reduce serially, so output never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tac
