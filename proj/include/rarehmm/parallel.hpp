#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace rarehmm {

// Runs fn(0..jobs-1) on up to `workers` threads. Each job must write only
// its own output slot; callers reduce in job order afterwards, so results
// never depend on scheduling.
inline void parallel_for(int jobs, int workers,
                         const std::function<void(int)>& fn) {
  if (workers <= 1 || jobs <= 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) fn(j);
  };
  std::vector<std::thread> pool;
  const int spawn = std::min(workers, jobs);
  pool.reserve(spawn);
  for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace rarehmm
