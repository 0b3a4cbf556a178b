#pragma once

#include <cstddef>
#include <functional>

namespace toffee {

// Caps the worker-thread count used by parallel loops. 0 means hardware
// concurrency. Thread count never changes results: indices are processed
// independently and any reduction over them happens in fixed order afterwards.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for every i in [0, count). fn must only write state owned by
// index i. The first exception (lowest index) is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace toffee
