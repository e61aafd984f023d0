#pragma once

#include <cstddef>
#include <vector>

#include <omp.h>

namespace ncc {

/// Selects between the serial reference path of a kernel and its OpenMP path.
enum class Exec { serial, parallel };

/// Items per reduction chunk. Fixed so that parallel sums do not depend on
/// the number of threads.
inline constexpr std::size_t kReductionChunk = 2048;

/// Applies NCC_NUM_THREADS (if set) as the OpenMP worker cap. Returns the
/// resulting maximum thread count.
int configure_workers_from_env();

/// Sums f(i) for i in [0, n).
///
/// The serial path is a plain left-to-right loop. The parallel path sums
/// fixed-size chunks concurrently and then adds the chunk partials in chunk
/// order, so its result is bitwise reproducible for any thread count.
template <class F>
double reduce_sum(std::size_t n, F&& f, Exec exec = Exec::parallel) {
  if (exec == Exec::serial) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += f(i);
    return total;
  }
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t hi = lo + kReductionChunk < n ? lo + kReductionChunk : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace ncc
