#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rsprune {

// Splits [0, n) into `workers` contiguous ranges and calls fn(begin, end) on
// each from its own thread. Range boundaries depend only on (n, workers), and
// callers write results into disjoint slots, so output never depends on
// scheduling. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for_ranges(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  const std::size_t parts = std::min<std::size_t>(workers, n);
  const std::size_t step = n / parts;
  const std::size_t extra = n % parts;
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(parts);
    std::size_t begin = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t end = begin + step + (p < extra ? 1 : 0);
      threads.emplace_back([&, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
      begin = end;
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace rsprune
