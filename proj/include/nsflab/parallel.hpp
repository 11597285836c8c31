#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace nsflab {

/// Number of worker threads used by data-parallel cell loops. Results never
/// depend on this value: loops are element-wise and reductions go through
/// deterministic_sum.
void set_thread_count(int n);
[[nodiscard]] int thread_count();

/// Sum with a fixed summation tree. The input is cut into blocks of fixed
/// length, each block is summed left to right, and block sums are combined
/// pairwise. The association order depends only on the length of the input.
[[nodiscard]] double deterministic_sum(std::span<const double> values);

/// Max/min reductions are order independent; provided for symmetry.
[[nodiscard]] double deterministic_max(std::span<const double> values);
[[nodiscard]] double deterministic_min(std::span<const double> values);

/// Runs body(k) for k in [0, n) on the worker threads. An exception thrown by
/// any iteration is rethrown after the loop; when several iterations throw,
/// the one with the smallest index wins, so failures do not depend on timing.
template <class Body>
void parallel_for(long n, Body&& body) {
  long failed_at = n;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    try {
      body(k);
    } catch (...) {
#pragma omp critical(nsflab_parallel_for)
      {
        if (k < failed_at) {
          failed_at = k;
          failure = std::current_exception();
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace nsflab
