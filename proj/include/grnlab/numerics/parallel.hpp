// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace grnlab {

/// Worker cap from GRNLAB_THREADS, else the hardware concurrency; at least 1.
/// Throws std::invalid_argument if the variable is set but not a positive integer.
std::size_t thread_cap();

/// Runs fn(i) for i in [0, n) on up to thread_cap() threads. Work items must
/// write only to their own slots; callers combine results in index order, so
/// the outcome does not depend on the thread count. The first exception thrown
/// by any item is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace grnlab
