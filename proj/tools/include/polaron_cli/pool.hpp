#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace polaron::cli {

// Runs f(i) for i in [0, n) on `workers` threads. Results land at their
// index, so the output order never depends on scheduling. The first
// failure by index is rethrown after all threads join.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, int workers, F f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> err(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        err[i] = std::current_exception();
      }
    }
  };
  const std::size_t k = std::clamp<std::size_t>(workers > 0 ? workers : 1, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < k; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace polaron::cli
