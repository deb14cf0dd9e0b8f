#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tcqs {

// Runs fn(i) for i in [0, total). Work items must write to disjoint,
// preallocated slots; the schedule then has no effect on results. The first
// exception thrown by a worker is rethrown after all threads join.
inline void parallel_for(std::size_t total, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i);
    return;
  }
  const auto workers = static_cast<std::size_t>(threads) < total
                           ? static_cast<std::size_t>(threads)
                           : total;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= total) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tcqs
