#include "nsflab/parallel.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nsflab {

namespace {
constexpr std::size_t kBlock = 64;
int g_threads = 1;
}  // namespace

void set_thread_count(int n) {
  g_threads = std::max(1, n);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return g_threads;
#endif
}

double deterministic_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  const auto nb = static_cast<long>(nblocks);
#pragma omp parallel for schedule(static) if (nblocks > 16)
  for (long b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += values[k];
    partial[static_cast<std::size_t>(b)] = s;
  }
  // pairwise tree over block sums
  std::size_t width = nblocks;
  while (width > 1) {
    const std::size_t half = width / 2;
    for (std::size_t k = 0; k < half; ++k) partial[k] = partial[2 * k] + partial[2 * k + 1];
    if (width % 2 == 1) partial[half] = partial[width - 1];
    width = half + width % 2;
  }
  return partial[0];
}

double deterministic_max(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  return m;
}

double deterministic_min(std::span<const double> values) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values) m = std::min(m, v);
  return m;
}

}  // namespace nsflab
