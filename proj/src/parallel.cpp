#include "embalign/parallel.hpp"

#include <atomic>

namespace embalign {

namespace {
std::atomic<unsigned> g_thread_cap{0};
}

void set_max_threads(unsigned threads) { g_thread_cap.store(threads); }

unsigned max_threads() {
  const unsigned cap = g_thread_cap.load();
  if (cap != 0) return cap;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace embalign
