#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qrmap {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items are
/// claimed from a shared counter, so callers must write results by index;
/// the first exception thrown by any item is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t nthreads =
      std::min<std::size_t>(count, workers > 1 ? static_cast<std::size_t>(workers) : 1);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qrmap
