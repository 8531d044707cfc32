#pragma once

#include <cstddef>
#include <functional>

namespace forged {

// Worker cap used by library routines that parallelize internally. Results
// never depend on this value. Zero means "use FORGED_EEG_THREADS, else the
// hardware concurrency".
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = thread_count()).
// The first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);

}  // namespace forged
