#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace mqs {

// Worker count: hardware concurrency capped by the MQS_THREADS environment
// variable (values below 1 are ignored). Read per call so tests can vary it.
inline int max_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw > 0 ? static_cast<int>(hw) : 1;
  if (const char* env = std::getenv("MQS_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Chunked parallel loop over [0, n). Chunk boundaries depend only on n and
// grain, never on the worker count, so per-chunk outputs merge in the same
// order no matter how many threads execute. fn(chunk_index, begin, end) must
// only write chunk-local or per-index state.
template <class Fn>
void parallel_for_chunks(std::size_t n, std::size_t grain, Fn&& fn) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t num_chunks = (n + grain - 1) / grain;
  const int workers = std::min<std::size_t>(max_threads(), num_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c)
      fn(c, c * grain, std::min(n, (c + 1) * grain));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      fn(c, c * grain, std::min(n, (c + 1) * grain));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

inline std::size_t num_chunks_for(std::size_t n, std::size_t grain) {
  grain = std::max<std::size_t>(grain, 1);
  return n == 0 ? 0 : (n + grain - 1) / grain;
}

}  // namespace mqs
