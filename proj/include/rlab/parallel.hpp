#pragma once

#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace rlab {

// Worker cap: explicit request, else RLAB_THREADS, else 1.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RLAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// Runs fn(i) for i in [0, count) and collects results in index order, so the
// output is identical for every thread count. fn must be a pure function of i.
template <typename T, typename Fn>
std::vector<T> parallel_map(long count, int threads, Fn&& fn) {
  std::vector<T> out(static_cast<size_t>(count));
  threads = resolve_threads(threads);
  if (threads <= 1 || count < 2) {
    for (long i = 0; i < count; ++i) out[static_cast<size_t>(i)] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (long i = t; i < count; i += threads)
          out[static_cast<size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace rlab
