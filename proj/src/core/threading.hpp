#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "core/error.hpp"

namespace obdet {

// Runs fn(i) for every i in [0, n) on at most `jobs` threads. Indices are
// split into contiguous static chunks, so each index runs exactly once and
// callers that write to per-index slots get results independent of the worker
// count. The first exception thrown by any worker is rethrown.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  require(jobs >= 1, "jobs must be >= 1");
  if (n == 0) return;
  const std::size_t workers = std::min(static_cast<std::size_t>(jobs), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&fn, &errors, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace obdet
