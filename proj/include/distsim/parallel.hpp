// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace distsim {

/// Run body(i) for i in [0, n) across up to `workers` threads.  Each index
/// must touch disjoint state; reductions belong to the caller, after the
/// join, so results never depend on the worker count.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  unsigned spawn = std::min<unsigned>(workers, static_cast<unsigned>(n));
  pool.reserve(spawn);
  for (unsigned w = 0; w < spawn; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& thread : pool) thread.join();
}

}  // namespace distsim
