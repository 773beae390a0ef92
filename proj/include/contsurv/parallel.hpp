#pragma once

#include <cstddef>
#include <functional>

namespace contsurv {

// Worker count from an explicit request, falling back to CONTSURV_THREADS,
// then to 1. Never returns 0.
unsigned resolve_threads(unsigned requested);

// Calls body(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; the first exception thrown is rethrown here.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace contsurv
