#pragma once

#include <omp.h>

#include <cstddef>
#include <exception>
#include <mutex>

namespace stabledom::detail {

// Runs body(i) for i in [0, count) across OpenMP threads and rethrows the
// first exception on the calling thread. workers <= 0 keeps the default.
template <typename Body>
void parallel_for(std::size_t count, Body body, int workers = 0) {
  std::exception_ptr failure;
  std::mutex guard;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace stabledom::detail
