#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace kolmo {

/// Worker cap: min(hardware_concurrency, KOLMO_THREADS). At least 1.
int worker_count();

/// Runs fn(begin, end) over [0, n) split into fixed-size chunks. Chunk
/// boundaries do not depend on the worker count, so per-chunk partial
/// results can be combined in chunk order for bitwise-reproducible
/// reductions regardless of threading.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Deterministic parallel sum of term(i) over [0, n).
template <class F>
double parallel_sum(std::size_t n, F&& term, std::size_t chunk = 4096) {
  if (n == 0) return 0.0;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += term(i);
    partial[c] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// Parallel map into caller-owned storage; apply(i) must write only slot i.
template <class F>
void parallel_map(std::size_t n, F&& apply, std::size_t chunk = 1024) {
  parallel_chunks(n, chunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) apply(i);
  });
}

}  // namespace kolmo
