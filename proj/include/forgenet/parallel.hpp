#pragma once

#include <cstddef>
#include <functional>

namespace forgenet {

// Process-wide worker count for intra-batch parallelism. Defaults to 1.
void set_thread_count(int threads);
int thread_count() noexcept;

// Runs body(i) for i in [0, count). Work is split into contiguous chunks;
// callers must only write to slots owned by i so results do not depend on
// the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace forgenet
