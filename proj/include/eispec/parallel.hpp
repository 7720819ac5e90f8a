#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace eispec {

// Worker count: EISPEC_WORKERS if set, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("EISPEC_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(0..n_jobs-1) on a small worker pool. Jobs must be independent and
// write results keyed by index, so the outcome does not depend on the worker
// count. The first exception thrown by any job is rethrown to the caller.
inline void parallel_for(std::size_t n_jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = worker_count();
  if (n_jobs == 0) return;
  if (workers <= 1 || n_jobs == 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(workers, n_jobs));
  pool.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace eispec
