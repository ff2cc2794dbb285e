#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hqnet {

// HQNET_JOBS overrides the requested count; 0 means one job per hardware thread.
inline int resolve_jobs(int requested) {
  if (const char* env = std::getenv("HQNET_JOBS")) {
    try {
      requested = std::stoi(env);
    } catch (const std::exception&) {
    }
  }
  if (requested <= 0) requested = static_cast<int>(std::thread::hardware_concurrency());
  return requested > 0 ? requested : 1;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; tasks are claimed in
// index order and the first exception is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(jobs > 0 ? jobs : 1);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hqnet
