#pragma once

#include <cstddef>
#include <functional>

namespace ncv {

/// Worker count used when a caller passes 0.
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled exactly once; callers write results into pre-sized slots so the
/// outcome never depends on scheduling. The first exception thrown by any
/// body is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace ncv
