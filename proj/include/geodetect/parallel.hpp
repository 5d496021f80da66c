#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geodetect {

/// Parallelism handed down from the caller (the CLI owns the thread budget).
/// Work is always split into tasks whose identity does not depend on the
/// thread count; results are stored per task and reduced in task order, so
/// outputs are identical for any `threads`.
struct ExecContext {
  unsigned threads = 1;

  static ExecContext hardware() {
    return {std::max(1u, std::thread::hardware_concurrency())};
  }

  /// Calls fn(i) for i in [0, count). Tasks are handed out in contiguous
  /// static chunks; the first exception thrown by any task is rethrown.
  template <class Fn>
  void for_each(std::size_t count, Fn&& fn) const {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  /// Maps fn over [0, count) into a vector ordered by task index.
  template <class T, class Fn>
  std::vector<T> map(std::size_t count, Fn&& fn) const {
    std::vector<T> out(count);
    for_each(count, [&](std::size_t i) { out[i] = fn(i); });
    return out;
  }
};

}  // namespace geodetect
