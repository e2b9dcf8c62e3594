#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace iur {

// Applies fn(i) for i in [0, n) and collects results by index, so the output
// order never depends on the thread count. fn must be safe to call
// concurrently.
template <typename Out, typename Fn>
std::vector<Out> ordered_parallel_map(std::size_t n, int threads, Fn fn) {
  std::vector<Out> results(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      results[i] = fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(threads, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace iur
