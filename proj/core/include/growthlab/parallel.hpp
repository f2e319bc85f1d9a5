#pragma once

#include <cstddef>
#include <functional>

namespace growthlab {

// Worker count: GROWTHLAB_THREADS when set, else hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0, n). Results must be written to index-owned slots;
// the first exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace growthlab
