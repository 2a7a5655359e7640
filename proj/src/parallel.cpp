#include "modalms/parallel.hpp"

#include <atomic>

#include "modalms/errors.hpp"

namespace modalms {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) {
  if (n < 0) throw ConfigError("thread count must be >= 0");
  g_threads.store(n, std::memory_order_relaxed);
}

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

int effective_threads() {
#ifdef _OPENMP
  int n = thread_count();
  return n > 0 ? n : omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {
int clamped_threads() {
  int n = effective_threads();
  return n > 0 ? n : 1;
}
}  // namespace detail

}  // namespace modalms
