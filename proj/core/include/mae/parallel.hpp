#pragma once

#include <cstddef>
#include <functional>

namespace mae {

// Runs fn(i) for i in [0, count), split into contiguous chunks across worker
// threads. Every kernel parallelized through here writes disjoint outputs and
// keeps reductions sequential inside each work item, so the result is
// bit-identical for any thread count. Exceptions from workers are rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace mae
