#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cpirt {

/// Number of worker threads used by parallel_for (at least one).
inline std::size_t worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs task(t) for t in [0, n_tasks). Tasks must write only to their own
/// slots; callers combine results in task order, which keeps reductions
/// bit-identical for any thread count. Nested calls run serially. If a task
/// throws, tasks not yet started are skipped and one of the exceptions is
/// rethrown on the calling thread after all workers have finished.
template <typename Task>
void parallel_for(std::size_t n_tasks, Task&& task) {
  const std::size_t n_threads = std::min(worker_count(), n_tasks);
  if (n_threads <= 1 || detail::in_parallel_region) {
    for (std::size_t t = 0; t < n_tasks; ++t) task(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      detail::in_parallel_region = true;
      for (std::size_t t = next++; t < n_tasks; t = next++) {
        try {
          task(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n_tasks;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cpirt
