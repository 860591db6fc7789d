#pragma once

#include <cstddef>
#include <functional>

namespace logodet {

// Global worker count. The CLI sets this from --threads; 1 disables threading.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for every i in [0, n). Each index is processed exactly once by
// exactly one thread, so index-addressed outputs are identical for every
// thread count. fn must not touch shared mutable state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace logodet
