#ifndef STOSYM_PARALLEL_HPP_
#define STOSYM_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace stosym {

/* Number of worker threads used by parallel loops. 0 = hardware default. */
inline int& thread_count() {
  static int n = 0;
  return n;
}

/* Runs fn(begin, end) over fixed-size chunks of [0, n).
 *
 * Chunk boundaries depend only on n (not on the thread count), and each
 * chunk writes to its own index range, so results are identical for any
 * number of threads. */
template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn, std::int64_t chunk = 1 << 14) {
  if (n <= 0) return;
  int nt = thread_count();
  if (nt <= 0) nt = static_cast<int>(std::thread::hardware_concurrency());
  nt = std::max(1, nt);
  const std::int64_t nchunks = (n + chunk - 1) / chunk;
  if (nt == 1 || nchunks == 1) {
    for (std::int64_t c = 0; c < nchunks; ++c)
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::int64_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace stosym

#endif
