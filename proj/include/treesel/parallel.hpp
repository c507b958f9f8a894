#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace treesel {

/// Runs fn(block) for block in [0, blocks) on a small worker pool. Callers
/// write per-block results into slots and reduce them in block order, so the
/// result never depends on the number of workers.
template <typename Fn>
void parallel_blocks(std::size_t blocks, Fn&& fn, std::size_t max_workers = 0) {
  std::size_t workers = max_workers ? max_workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace treesel
