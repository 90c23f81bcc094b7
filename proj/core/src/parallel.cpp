#include "scvad/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace scvad {
namespace {

std::atomic<std::size_t> g_override{0};

std::size_t default_threads() {
  static const std::size_t value = [] {
    if (const char* env = std::getenv("SCVAD_THREADS")) {
      try {
        const long parsed = std::stol(env);
        if (parsed > 0) return static_cast<std::size_t>(parsed);
      } catch (const std::exception&) {
      }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }();
  return value;
}

}  // namespace

std::size_t thread_count() {
  const auto forced = g_override.load(std::memory_order_relaxed);
  return forced != 0 ? forced : default_threads();
}

void set_thread_count(std::size_t threads) { g_override.store(threads, std::memory_order_relaxed); }

namespace detail {

void parallel_for_threads(std::size_t n, std::size_t work_per_item,
                          const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t total = n * std::max<std::size_t>(work_per_item, 1);
  std::size_t workers = std::min({thread_count(), n, std::max<std::size_t>(1, total / kMinParallelWork)});
  if (workers <= 1) {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

}  // namespace scvad
