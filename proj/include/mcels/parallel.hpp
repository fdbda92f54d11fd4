#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mcels {

  inline std::size_t default_parallelism() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }

  /// Runs fn(i) for i in [0, n) on at most `workers` threads. Results must be written to
  /// per-index slots by fn, so output order never depends on completion order. The first
  /// exception thrown by any task is rethrown after all workers finish.
  template<typename Fn>
  void parallel_for_index(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
    if (workers == 1) {
      for (std::size_t i = 0; i < n; ++i) { fn(i); }
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto work = [&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) { failure = std::current_exception(); }
        }
      }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) { pool.emplace_back(work); }
    pool.clear();
    if (failure) { std::rethrow_exception(failure); }
  }

} // namespace mcels
