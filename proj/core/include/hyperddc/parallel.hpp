#pragma once

#include <cstddef>
#include <functional>

namespace hyperddc {

/// Worker count: hardware concurrency, capped by HYPERDDC_THREADS when set.
int worker_count();

/// Runs fn(i) for i in [0, n). Work items must be independent; callers write
/// results into pre-sized slots so the outcome does not depend on scheduling. Calls nested inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hyperddc
