#pragma once

#include <cstddef>
#include <functional>

namespace capspin {

// Thread count resolution: explicit request > CAPSPIN_THREADS env > hardware.
int resolve_thread_count(int requested = 0);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// executed exactly once and writes only caller-owned per-index state, so
// results cannot depend on the thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace capspin
