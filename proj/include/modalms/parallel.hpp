#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace modalms {

//! Sets the thread count used by all parallel kernels. 0 restores the
//! OpenMP default. Negative values are rejected.
void set_thread_count(int n);

//! The configured thread count (0 means "OpenMP default").
int thread_count();

//! The number of threads a parallel region will actually use.
int effective_threads();

namespace detail {
int clamped_threads();
}

//! Runs body(i) for i in [0, n). Iterations must be independent and write
//! only their own output slots; under that contract results are identical
//! for every thread count. The first exception thrown by any iteration is
//! rethrown on the calling thread after the loop drains.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
#ifdef _OPENMP
  if (n == 0) return;
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(modalms::detail::clamped_threads())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(modalms_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace modalms
