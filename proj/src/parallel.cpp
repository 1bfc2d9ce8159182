#include "curvrec/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace curvrec {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_blocks(int n_blocks, int n_threads, const std::function<void(int, int)>& fn) {
  n_threads = std::min(std::max(1, n_threads), std::max(1, n_blocks));
  if (n_threads == 1) {
    for (int b = 0; b < n_blocks; ++b) fn(b, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_threads);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int b = t; b < n_blocks; b += n_threads) fn(b, t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace curvrec
