#pragma once

#include <cstddef>
#include <functional>

namespace scvad {

// Upper bound on worker threads. Defaults to the SCVAD_THREADS environment
// variable, else the hardware concurrency.
std::size_t thread_count();
// Overrides the bound for the calling process; 0 restores the default.
void set_thread_count(std::size_t threads);

// Work (n * work_per_item, in caller-defined units) below which a range runs
// on the calling thread.
inline constexpr std::size_t kMinParallelWork = std::size_t{1} << 16;

namespace detail {
void parallel_for_threads(std::size_t n, std::size_t work_per_item,
                          const std::function<void(std::size_t, std::size_t)>& body);
}

// Runs body(begin, end) over contiguous chunks of [0, n).
template <typename Body>
void parallel_for(std::size_t n, std::size_t work_per_item, Body&& body) {
  if (n == 0) return;
  if (n < 2 || n * (work_per_item == 0 ? 1 : work_per_item) < 2 * kMinParallelWork) {
    body(std::size_t{0}, n);
    return;
  }
  detail::parallel_for_threads(n, work_per_item, body);
}

}  // namespace scvad
