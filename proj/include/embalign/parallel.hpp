#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace embalign {

// Process-wide cap on worker threads used by inner kernels. 0 restores the
// default (hardware concurrency).
void set_max_threads(unsigned threads);
unsigned max_threads();

// Splits [0, count) into contiguous chunks and runs body(begin, end) on each.
// Chunks never share output, so results do not depend on the thread count.
// The exception from the lowest failing chunk is rethrown.
template <class Body>
void parallel_for(std::int64_t count, std::int64_t grain, Body&& body) {
  if (count <= 0) return;
  const std::int64_t workers = std::min<std::int64_t>(
      max_threads(), std::max<std::int64_t>(1, count / std::max<std::int64_t>(grain, 1)));
  if (workers <= 1) {
    body(std::int64_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t begin = count * w / workers;
    const std::int64_t end = count * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace embalign
