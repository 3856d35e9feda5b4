#pragma once

#include <cstddef>
#include <functional>

namespace varsig {

/// Worker count: VARSIG_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
int max_threads();

/// Runs body(i) for i in [0, n) across up to max_threads() threads. Work
/// items must be independent; callers that reduce results must do so in a
/// fixed order afterwards so output does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace varsig
