#pragma once

// Minimal deterministic parallel-for.  Work items write into caller-owned
// slots indexed by item id, so the result is independent of the thread count.
// GENBOUND_THREADS caps the pool size (default: hardware concurrency).

#include <atomic>
#include <cstdlib>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace genbound {

inline std::size_t thread_budget() {
  if (const char* env = std::getenv("GENBOUND_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// f(i) is called exactly once for every i in [0, count); order unspecified.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  std::size_t workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        f(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace genbound
