#pragma once

#include <cstdint>
#include <functional>

namespace khoplab {

/// Worker count: KHOPLAB_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Runs fn(block) for block in [0, blocks). Blocks are distributed over
/// workers; callers own per-block state and must combine it in block order so
/// results do not depend on scheduling.
void parallel_blocks(std::uint64_t blocks, const std::function<void(std::uint64_t)>& fn);

}  // namespace khoplab
