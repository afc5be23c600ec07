#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tfarm {

/// Default worker count: the hardware concurrency, at least 1.
inline std::size_t default_threads() noexcept {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(i) for every i in [0, count) on up to `threads` workers. Work items
/// are claimed dynamically, so fn must write its result to slot i rather than
/// append. The first exception thrown by any item is rethrown after all workers
/// join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tfarm
