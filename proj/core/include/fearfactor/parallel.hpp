#pragma once

#include <cstddef>
#include <functional>

namespace fearfactor {

/// Worker count: FEARFACTOR_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is processed exactly once; results must be
/// written to per-index slots so output does not depend on scheduling. The first
/// exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fearfactor
