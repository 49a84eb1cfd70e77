#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace powerlogit {

/// Calls f(i) for i in [0, n), split into contiguous chunks over `threads`
/// workers. The first exception thrown by any worker is rethrown.
template <class Index, class F>
void parallel_for(Index n, int threads, F&& f) {
  if (threads <= 1 || n < static_cast<Index>(2 * threads)) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    const Index chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const Index begin = std::min(n, static_cast<Index>(t) * chunk);
      const Index end = std::min(n, begin + chunk);
      workers.emplace_back([&, begin, end, t] {
        try {
          for (Index i = begin; i < end; ++i) f(i);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Thread count from the POWERLOGIT_THREADS environment variable (default 1).
inline int default_thread_count() {
  if (const char* env = std::getenv("POWERLOGIT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace powerlogit
