#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace overparam {

// Worker cap: OVERPARAM_THREADS if set, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("OVERPARAM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(block_index, begin, end) for fixed-size blocks of [0, count).
// Block boundaries depend only on count and block_size, never on the worker
// count, so per-block results merged in block order are bit-identical across
// thread counts. Exceptions from workers are rethrown on the calling thread.
template <class Fn>
void parallel_blocks(long count, long block_size, Fn&& fn) {
  if (count <= 0) return;
  long blocks = (count + block_size - 1) / block_size;
  int workers = std::min<long>(worker_count(), blocks);
  if (workers <= 1) {
    for (long b = 0; b < blocks; ++b)
      fn(b, b * block_size, std::min(count, (b + 1) * block_size));
    return;
  }

  std::atomic<long> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (;;) {
      long b = next.fetch_add(1);
      if (b >= blocks || failed.load()) return;
      try {
        fn(b, b * block_size, std::min(count, (b + 1) * block_size));
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(error);
}

// One independent task per index, each writing only its own output slot.
template <class Fn>
void parallel_indices(long count, Fn&& fn) {
  parallel_blocks(count, 1, [&](long, long lo, long) { fn(lo); });
}

}  // namespace overparam
