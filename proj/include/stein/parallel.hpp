#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace stein {

/// Worker cap from the STEIN_THREADS environment variable.
/// 0 or unset means auto (hardware concurrency).
inline int worker_count() {
  static const int cached = [] {
    long requested = 0;
    if (const char* env = std::getenv("STEIN_THREADS")) {
      requested = std::strtol(env, nullptr, 10);
    }
    if (requested <= 0) {
      unsigned hw = std::thread::hardware_concurrency();
      return hw == 0 ? 1 : static_cast<int>(hw);
    }
    return static_cast<int>(requested);
  }();
  return cached;
}

/// Runs fn(i) for i in [begin, end) over contiguous per-thread chunks.
/// Iterations must be independent; results are then identical for any
/// worker count. Exceptions are collected and the first is rethrown.
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(lo + chunk, end);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi, w] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace stein
