#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace balwt {

// Worker cap from BALWT_THREADS; defaults to the hardware count.
inline int thread_count() {
  if (const char* env = std::getenv("BALWT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count). Each index writes only its own output slot,
// so results are independent of scheduling; exceptions are rethrown once.
template <typename Fn>
void parallel_for(long count, Fn&& fn) {
  const int workers = std::min<long>(thread_count(), count);
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace balwt
