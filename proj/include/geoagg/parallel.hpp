#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geoagg {

/// Worker count: GEOAGG_THREADS when set (must be a positive integer, else
/// InvalidArgument), otherwise std::thread::hardware_concurrency().
std::size_t default_thread_count();

/// Calls fn(task) for every task in [0, n_tasks) on up to `threads` workers.
/// Tasks are claimed dynamically, so callers that need deterministic output must
/// write results into per-task slots. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t n_tasks, std::size_t threads, Fn&& fn) {
  if (n_tasks == 0) return;
  threads = std::clamp<std::size_t>(threads, 1, n_tasks);
  if (threads == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace geoagg
