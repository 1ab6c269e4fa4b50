#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aec {

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_thread_limit(int threads);
int thread_limit();

// Runs body(i) for i in [0, n). Work is handed out dynamically, so bodies
// must not depend on execution order; results should be written by index.
// The first exception thrown by any body is rethrown after all workers join.
template <typename Body>
void parallel_for(std::int64_t n, Body&& body) {
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_limit(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::int64_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace aec
