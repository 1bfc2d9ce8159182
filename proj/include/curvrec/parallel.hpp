#pragma once

#include <functional>

namespace curvrec {

/// Resolves a requested thread count; 0 means "use all hardware threads".
int resolve_threads(int requested);

/// Runs fn(block, thread) for every block in [0, n_blocks). Block b is always
/// handled by thread b % n_threads, so the partition (and therefore any
/// per-thread accumulation order) is a pure function of (n_blocks, n_threads).
void parallel_blocks(int n_blocks, int n_threads, const std::function<void(int, int)>& fn);

}  // namespace curvrec
