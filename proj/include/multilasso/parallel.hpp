#pragma once

#include <cstdint>
#include <functional>

namespace multilasso {

// Number of worker threads currently in effect (>= 1).
int thread_count();

// n > 0 pins the count; n == 0 restores auto (MULTILASSO_THREADS env var,
// falling back to hardware concurrency).
void set_thread_count(int n);

// Static block partition of [0, n) across thread_count() workers.
// The body must only write to slots owned by its index range; any reduction
// happens sequentially afterwards, so results are identical for every
// thread count.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t begin, std::int64_t end)>& body);

}  // namespace multilasso
