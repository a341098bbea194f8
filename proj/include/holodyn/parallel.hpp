#pragma once

#include <cstddef>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace holodyn {

// Execution policy for the data-parallel kernels. Every kernel has a serial
// path that produces bit-identical output: parallel bodies only ever write to
// their own slot, and reductions run afterwards over the slot array with a
// fixed summation tree.
enum class exec { serial, parallel };

inline exec& default_exec() {
  static exec e = exec::parallel;
  return e;
}

inline void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// body(i) must not throw and must only touch state owned by index i.
template <class F>
void par_for(std::size_t n, F&& body, exec mode = default_exec()) {
  if (mode == exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

// Pairwise summation over a fixed binary tree: the result depends only on the
// array contents, never on thread count or schedule.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double pairwise_mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace holodyn
