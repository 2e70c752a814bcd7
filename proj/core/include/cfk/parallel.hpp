#pragma once

#include <cstddef>
#include <functional>

namespace cfk {

/// Runs fn(0..n-1) on up to `jobs` threads (jobs <= 1 runs inline). Work is
/// handed out by an atomic counter; callers write results into per-index
/// slots so output never depends on scheduling. If several calls throw, the
/// exception from the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cfk
