#pragma once

#include <cstddef>
#include <functional>

namespace mni {

// Runs fn(i) for i in [0, count), each index exactly once. jobs <= 1 runs
// inline; jobs == 0 uses default_jobs(). Callers must give each index its own
// output slot; no ordering between indices is guaranteed.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

int default_jobs();

}  // namespace mni
