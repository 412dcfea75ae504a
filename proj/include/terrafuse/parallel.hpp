#ifndef TERRAFUSE_PARALLEL_HPP
#define TERRAFUSE_PARALLEL_HPP

#include <algorithm>
#include <thread>
#include <vector>

namespace terrafuse {

/// Calls fn(begin, end) over contiguous chunks of [0, count). threads <= 1
/// runs inline on the calling thread.
template <typename Fn>
void parallel_chunks(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2 * threads) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace terrafuse

#endif  // TERRAFUSE_PARALLEL_HPP
